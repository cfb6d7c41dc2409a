#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "phgrid/model.hpp"
#include "phgrid/network.hpp"

namespace phgrid {

/// Distributed controller parameters. Q is the symmetric positive definite
/// generation cost (coupling across machines allowed), T and K the diagonal
/// positive time constants and droop gains, comm the communication graph.
struct ControllerConfig {
  Eigen::MatrixXd Q;
  Eigen::VectorXd T;
  Eigen::VectorXd K;
  CommGraph comm;
  Eigen::MatrixXd Qinv;  // cached at construction

  int n() const { return static_cast<int>(T.size()); }
};

/// Builds the config, verifying Q = Q^T > 0, T > 0, K > 0 and matching sizes.
ControllerConfig make_controller_config(Eigen::MatrixXd Q, Eigen::VectorXd T, Eigen::VectorXd K,
                                        CommGraph comm);

/// Cost-minimizing dispatch for total demand 1^T P_d:
/// lambda* = 1^T P_d / (1^T Q^-1 1), P_m* = Q^-1 1 lambda*.
struct DispatchSolution {
  Eigen::VectorXd Pm_star;
  double lambda_star = 0.0;
};

DispatchSolution optimal_dispatch(const Eigen::MatrixXd& Q, const Eigen::VectorXd& Pd);

/// P_m = Q^-1 T^-1 vartheta - K omega.
Eigen::VectorXd controller_output(const ControllerConfig& c, const Eigen::VectorXd& vartheta,
                                  const Eigen::VectorXd& omega);

/// vartheta_dot = -L_c T^-1 vartheta - Q^-1 omega.
Eigen::VectorXd controller_rhs(const ControllerConfig& c, const Eigen::VectorXd& vartheta,
                               const Eigen::VectorXd& omega);

struct SteadyStateCheck {
  std::string name;
  double value = 0.0;
  double tol = 0.0;
  bool pass = false;
};

struct SteadyStateReport {
  std::vector<SteadyStateCheck> checks;
  bool all_pass = false;
  double lambda_star = 0.0;
  Eigen::VectorXd Pm_star;
};

/// Plant and controller coupled through the momentum port. The closed-loop
/// state is z = [x_p; vartheta] and the energy H = H_p + H_c.
class ClosedLoopModel {
 public:
  ClosedLoopModel(MultiMachineModel plant, ControllerConfig ctrl);

  const MultiMachineModel& plant() const { return plant_; }
  const ControllerConfig& controller() const { return ctrl_; }
  const PHStructure& ph() const { return ph_; }
  int state_dim() const { return plant_.state_dim() + plant_.n(); }

  Eigen::VectorXd plant_part(const Eigen::VectorXd& z) const { return z.head(plant_.state_dim()); }
  Eigen::VectorXd vartheta_part(const Eigen::VectorXd& z) const { return z.tail(plant_.n()); }
  Eigen::VectorXd omega(const Eigen::VectorXd& z) const;
  Eigen::VectorXd theta(const Eigen::VectorXd& z) const;  // T^-1 vartheta

  /// Monolithic closed-loop right-hand side
  ///   z_dot = [J-R-R_K, G^T; -G, -L_c] grad H - [g; 0] P_d.
  Eigen::VectorXd rhs(const Eigen::VectorXd& z, const Eigen::VectorXd& Pd) const;

  /// Same map composed from plant ph_rhs with u = controller_output stacked
  /// with controller_rhs; kept separate as a cross-check of the block form.
  Eigen::VectorXd rhs_compositional(const Eigen::VectorXd& z, const Eigen::VectorXd& Pd) const;

  /// [grad H_p(x); T^-1 vartheta].
  Eigen::VectorXd extended_gradient(const Eigen::VectorXd& z) const;

  double hamiltonian(const Eigen::VectorXd& z) const;
  double shifted_hamiltonian(const Eigen::VectorXd& z, const Eigen::VectorXd& zbar) const;

  /// -grad Hbar^T blockdiag(R + R_K, L_c) grad Hbar, the derivative of the
  /// shifted Hamiltonian along closed-loop trajectories.
  double dissipation_rate(const Eigen::VectorXd& z, const Eigen::VectorXd& zbar) const;

  const Eigen::MatrixXd& dissipation_matrix() const { return R_cl_; }

  /// Membership conditions of the optimal steady-state set: vanishing
  /// closed-loop RHS, zero frequency, theta at the consensus value lambda*,
  /// dispatch at P_m*, and zero voltage gradient.
  SteadyStateReport verify_steady_state(const Eigen::VectorXd& zbar, const Eigen::VectorXd& Pd,
                                        double tol) const;

 private:
  MultiMachineModel plant_;
  ControllerConfig ctrl_;
  PHStructure ph_;
  Eigen::MatrixXd A_cl_;  // full closed-loop block matrix
  Eigen::MatrixXd R_cl_;  // blockdiag(R + R_K, L_c)
};

}  // namespace phgrid
