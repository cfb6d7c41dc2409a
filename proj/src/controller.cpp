#include "phgrid/controller.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Cholesky>

namespace phgrid {

namespace {

Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& Q, const char* what) {
  if (Q.rows() != Q.cols()) throw std::invalid_argument(std::string(what) + " must be square");
  const double scale = Q.cwiseAbs().maxCoeff();
  if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(scale, 1.0)) {
    throw std::invalid_argument(std::string(what) + " must be symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(Q);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument(std::string(what) + " must be positive definite");
  }
  return llt.solve(Eigen::MatrixXd::Identity(Q.rows(), Q.cols()));
}

}  // namespace

ControllerConfig make_controller_config(Eigen::MatrixXd Q, Eigen::VectorXd T, Eigen::VectorXd K,
                                        CommGraph comm) {
  const Eigen::Index n = T.size();
  if (Q.rows() != n || K.size() != n || comm.n != n) {
    throw std::invalid_argument("controller parameter sizes disagree");
  }
  if (!(T.minCoeff() > 0.0)) throw std::invalid_argument("controller time constants must be positive");
  if (!(K.minCoeff() > 0.0)) throw std::invalid_argument("droop gains must be positive");
  ControllerConfig c;
  c.Qinv = spd_inverse(Q, "cost matrix Q");
  c.Q = std::move(Q);
  c.T = std::move(T);
  c.K = std::move(K);
  c.comm = std::move(comm);
  return c;
}

DispatchSolution optimal_dispatch(const Eigen::MatrixXd& Q, const Eigen::VectorXd& Pd) {
  if (Q.rows() != Pd.size()) throw std::invalid_argument("cost/demand size mismatch");
  Eigen::LLT<Eigen::MatrixXd> llt(Q);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("cost matrix Q must be positive definite");
  }
  const Eigen::VectorXd w = llt.solve(Eigen::VectorXd::Ones(Q.rows()));
  DispatchSolution sol;
  sol.lambda_star = Pd.sum() / w.sum();
  sol.Pm_star = w * sol.lambda_star;
  return sol;
}

Eigen::VectorXd controller_output(const ControllerConfig& c, const Eigen::VectorXd& vartheta,
                                  const Eigen::VectorXd& omega) {
  const Eigen::VectorXd theta = vartheta.array() / c.T.array();
  return c.Qinv * theta - (c.K.array() * omega.array()).matrix();
}

Eigen::VectorXd controller_rhs(const ControllerConfig& c, const Eigen::VectorXd& vartheta,
                               const Eigen::VectorXd& omega) {
  const Eigen::VectorXd theta = vartheta.array() / c.T.array();
  return -c.comm.laplacian * theta - c.Qinv * omega;
}

ClosedLoopModel::ClosedLoopModel(MultiMachineModel plant, ControllerConfig ctrl)
    : plant_(std::move(plant)), ctrl_(std::move(ctrl)), ph_(plant_.assemble_ph()) {
  const int n = plant_.n();
  if (ctrl_.n() != n) throw std::invalid_argument("controller size does not match plant");
  const int N = plant_.state_dim();

  A_cl_ = Eigen::MatrixXd::Zero(N + n, N + n);
  A_cl_.topLeftCorner(N, N) = ph_.A;
  A_cl_.topLeftCorner(n, n) -= ctrl_.K.asDiagonal();  // droop on the momentum block
  A_cl_.block(0, N, n, n) = ctrl_.Qinv;               // G^T feeds Q^-1 theta into p_dot
  A_cl_.block(N, 0, n, n) = -ctrl_.Qinv;              // -G reads omega
  A_cl_.bottomRightCorner(n, n) = -ctrl_.comm.laplacian;

  R_cl_ = Eigen::MatrixXd::Zero(N + n, N + n);
  R_cl_.topLeftCorner(N, N) = ph_.R;
  R_cl_.topLeftCorner(n, n) += Eigen::MatrixXd(ctrl_.K.asDiagonal());
  R_cl_.bottomRightCorner(n, n) = ctrl_.comm.laplacian;
}

Eigen::VectorXd ClosedLoopModel::omega(const Eigen::VectorXd& z) const {
  return z.head(plant_.n()).array() / plant_.inertia().array();
}

Eigen::VectorXd ClosedLoopModel::theta(const Eigen::VectorXd& z) const {
  return z.tail(plant_.n()).array() / ctrl_.T.array();
}

Eigen::VectorXd ClosedLoopModel::rhs(const Eigen::VectorXd& z, const Eigen::VectorXd& Pd) const {
  if (z.size() != state_dim() || Pd.size() != plant_.n()) {
    throw std::invalid_argument("closed-loop state or demand dimension mismatch");
  }
  Eigen::VectorXd zdot = A_cl_ * extended_gradient(z);
  zdot.head(plant_.n()) -= Pd;
  return zdot;
}

Eigen::VectorXd ClosedLoopModel::rhs_compositional(const Eigen::VectorXd& z,
                                                   const Eigen::VectorXd& Pd) const {
  const Eigen::VectorXd x = plant_part(z);
  const Eigen::VectorXd vt = vartheta_part(z);
  const Eigen::VectorXd w = omega(z);
  const Eigen::VectorXd Pm = controller_output(ctrl_, vt, w);
  Eigen::VectorXd zdot(state_dim());
  zdot.head(plant_.state_dim()) = plant_.ph_rhs(ph_, x, Pm - Pd);
  zdot.tail(plant_.n()) = controller_rhs(ctrl_, vt, w);
  return zdot;
}

Eigen::VectorXd ClosedLoopModel::extended_gradient(const Eigen::VectorXd& z) const {
  Eigen::VectorXd g(state_dim());
  g.head(plant_.state_dim()) = plant_.grad_hamiltonian(plant_part(z));
  g.tail(plant_.n()) = z.tail(plant_.n()).array() / ctrl_.T.array();
  return g;
}

double ClosedLoopModel::hamiltonian(const Eigen::VectorXd& z) const {
  const Eigen::VectorXd vt = vartheta_part(z);
  const double H_c = 0.5 * (vt.array().square() / ctrl_.T.array()).sum();
  return plant_.hamiltonian(plant_part(z)) + H_c;
}

double ClosedLoopModel::shifted_hamiltonian(const Eigen::VectorXd& z,
                                            const Eigen::VectorXd& zbar) const {
  return hamiltonian(z) - (z - zbar).dot(extended_gradient(zbar)) - hamiltonian(zbar);
}

double ClosedLoopModel::dissipation_rate(const Eigen::VectorXd& z,
                                         const Eigen::VectorXd& zbar) const {
  const Eigen::VectorXd g = extended_gradient(z) - extended_gradient(zbar);
  return -g.dot(R_cl_ * g);
}

SteadyStateReport ClosedLoopModel::verify_steady_state(const Eigen::VectorXd& zbar,
                                                       const Eigen::VectorXd& Pd,
                                                       double tol) const {
  const int n = plant_.n();
  const StateDims d = plant_.dims();
  SteadyStateReport rep;
  const DispatchSolution sol = optimal_dispatch(ctrl_.Q, Pd);
  rep.lambda_star = sol.lambda_star;
  rep.Pm_star = sol.Pm_star;

  const Eigen::VectorXd w = omega(zbar);
  const Eigen::VectorXd th = theta(zbar);
  const Eigen::VectorXd Pm = controller_output(ctrl_, vartheta_part(zbar), w);
  const Eigen::VectorXd grad = plant_.grad_hamiltonian(plant_part(zbar));

  auto add = [&rep](const std::string& name, double value, double tolerance) {
    rep.checks.push_back({name, value, tolerance, value < tolerance});
  };
  add("closed_loop_rhs_inf", rhs(zbar, Pd).cwiseAbs().maxCoeff(), tol);
  add("frequency_inf", w.cwiseAbs().maxCoeff(), tol);
  add("marginal_price_spread", (th.array() - rep.lambda_star).abs().maxCoeff(), tol);
  add("dispatch_gap_inf", (Pm - rep.Pm_star).cwiseAbs().maxCoeff(), tol);
  add("voltage_gradient_inf", grad.segment(d.eq_t(), 4 * n).cwiseAbs().maxCoeff(), tol);

  rep.all_pass = true;
  for (const SteadyStateCheck& c : rep.checks) rep.all_pass = rep.all_pass && c.pass;
  return rep;
}

}  // namespace phgrid
