#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace phgrid {

struct NewtonOptions {
  int max_iter = 60;
  double tol = 1e-10;      // infinity norm of the residual
  double fd_step = 1e-7;   // scaled per component by 1 + |v_j|
  int max_backtracks = 40;
};

struct NewtonResult {
  Eigen::VectorXd v;
  double residual_inf = 0.0;
  int iterations = 0;
  bool converged = false;
  bool singular_jacobian = false;
  std::string message;
  std::vector<double> residual_history;
};

/// Damped Newton with a central-difference Jacobian on a square system
/// F(v) = 0. Converges in 0 iterations when the guess already satisfies the
/// tolerance; backtracks the step until the residual norm decreases.
NewtonResult newton_solve(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& F,
                          Eigen::VectorXd v0, const NewtonOptions& opts = {});

}  // namespace phgrid
