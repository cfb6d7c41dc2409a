#include "phgrid/newton.hpp"

#include <cmath>

#include <Eigen/LU>

namespace phgrid {

NewtonResult newton_solve(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& F,
                          Eigen::VectorXd v0, const NewtonOptions& opts) {
  NewtonResult res;
  res.v = std::move(v0);
  const Eigen::Index N = res.v.size();

  Eigen::VectorXd r = F(res.v);
  if (r.size() != N) {
    res.message = "residual dimension does not match unknowns";
    return res;
  }
  res.residual_inf = r.cwiseAbs().maxCoeff();
  res.residual_history.push_back(res.residual_inf);
  if (res.residual_inf < opts.tol) {
    res.converged = true;
    return res;
  }

  Eigen::MatrixXd J(N, N);
  Eigen::VectorXd vp(N), vm(N);
  for (int it = 1; it <= opts.max_iter; ++it) {
    vp = res.v;
    vm = res.v;
    for (Eigen::Index j = 0; j < N; ++j) {
      const double h = opts.fd_step * (1.0 + std::abs(res.v[j]));
      vp[j] = res.v[j] + h;
      vm[j] = res.v[j] - h;
      J.col(j) = (F(vp) - F(vm)) / (2.0 * h);
      vp[j] = res.v[j];
      vm[j] = res.v[j];
    }

    Eigen::FullPivLU<Eigen::MatrixXd> lu(J);
    if (!lu.isInvertible()) {
      res.singular_jacobian = true;
      res.iterations = it;
      res.message = "singular Jacobian at iteration " + std::to_string(it);
      return res;
    }
    const Eigen::VectorXd d = lu.solve(-r);

    double alpha = 1.0;
    bool improved = false;
    Eigen::VectorXd v_trial, r_trial;
    for (int bt = 0; bt <= opts.max_backtracks; ++bt) {
      v_trial = res.v + alpha * d;
      r_trial = F(v_trial);
      const double rn_trial = r_trial.cwiseAbs().maxCoeff();
      if (std::isfinite(rn_trial) && rn_trial < res.residual_inf) {
        res.v = std::move(v_trial);
        r = std::move(r_trial);
        res.residual_inf = rn_trial;
        improved = true;
        break;
      }
      alpha *= 0.5;
    }
    res.iterations = it;
    res.residual_history.push_back(res.residual_inf);
    if (!improved) {
      res.message = "line search stalled at iteration " + std::to_string(it) +
                    " (residual " + std::to_string(res.residual_inf) + ")";
      return res;
    }
    if (res.residual_inf < opts.tol) {
      res.converged = true;
      return res;
    }
  }
  res.message = "no convergence within " + std::to_string(opts.max_iter) +
                " iterations (residual " + std::to_string(res.residual_inf) + ")";
  return res;
}

}  // namespace phgrid
