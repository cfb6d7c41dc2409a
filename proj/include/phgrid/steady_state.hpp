#pragma once

#include <string>

#include <Eigen/Dense>

#include "phgrid/controller.hpp"
#include "phgrid/model.hpp"
#include "phgrid/newton.hpp"

namespace phgrid {

struct SteadyStateOptions {
  NewtonOptions newton;
  double hessian_fd_step = 1e-6;
  double psd_tol = -1e-12;  // eigenvalue floor counted as positive definite
};

struct SteadyStateResult {
  bool converged = false;
  Eigen::VectorXd state;     // full plant state x, or [x; vartheta] for the closed loop
  double residual_inf = 0.0;
  int iterations = 0;
  double hessian_min_eig = 0.0;
  bool hessian_pd = false;
  std::string message;
};

/// Open-loop steady state for constant input u (requires 1^T u = 0 for a
/// solution to exist). Solves in reduced coordinates: omega = 0, angles
/// relative to machine 0, machine-0 power balance dropped as redundant.
SteadyStateResult find_steady_state_open(const MultiMachineModel& model, const Eigen::VectorXd& u,
                                         const Eigen::VectorXd& x_guess,
                                         const SteadyStateOptions& opts = {});

/// Closed-loop steady state under constant demand Pd. Reduced coordinates:
/// omega = 0, angles relative to machine 0, unknown controller state, first
/// vartheta equation dropped (the rows sum to zero when omega = 0).
SteadyStateResult find_steady_state_closed(const ClosedLoopModel& cl, const Eigen::VectorXd& Pd,
                                           const Eigen::VectorXd& z_guess,
                                           const SteadyStateOptions& opts = {});

/// Exact open-loop steady state built by choosing machine angles: with
/// omega = 0 and fixed eta the voltage equations are linear in E, and the
/// matching input is u = P_e. Returns the state; u_out receives the input.
/// Useful for constructing equilibria without a Newton solve.
Eigen::VectorXd construct_open_loop_equilibrium(const MultiMachineModel& model,
                                                const Eigen::VectorXd& delta,
                                                Eigen::VectorXd& u_out);

}  // namespace phgrid
