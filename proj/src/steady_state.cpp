#include "phgrid/steady_state.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

namespace phgrid {

namespace {

// delta = [0; delta_rel], eta = D^T delta
Eigen::VectorXd eta_from_relative(const NetworkTopology& topo, const Eigen::VectorXd& delta_rel) {
  Eigen::VectorXd delta(topo.n);
  delta[0] = 0.0;
  delta.tail(topo.n - 1) = delta_rel;
  return topo.incidence.transpose() * delta;
}

double min_symmetric_eigenvalue(const Eigen::MatrixXd& H) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (H + H.transpose()),
                                                    Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace

SteadyStateResult find_steady_state_open(const MultiMachineModel& model, const Eigen::VectorXd& u,
                                         const Eigen::VectorXd& x_guess,
                                         const SteadyStateOptions& opts) {
  const StateDims d = model.dims();
  SteadyStateResult res;
  if (u.size() != d.n || x_guess.size() != d.size()) {
    res.message = "input or guess dimension mismatch";
    return res;
  }
  if (std::abs(u.sum()) > 1e-8 * std::max(1.0, u.cwiseAbs().maxCoeff())) {
    res.message = "net input does not balance: sum(u) = " + std::to_string(u.sum());
    return res;
  }

  // Unknowns: delta_rel (n-1) and the four E blocks (4n). omega = 0 is
  // structural; the first power-balance row is dropped because the n rows
  // sum to sum(u) = 0 identically when the electrical network is lossless.
  const int nv = 5 * d.n - 1;
  auto to_state = [&](const Eigen::VectorXd& v) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(d.size());
    x.segment(d.eta(), d.m) = eta_from_relative(model.topology(), v.head(d.n - 1));
    x.segment(d.eq_t(), 4 * d.n) = v.tail(4 * d.n);
    return x;
  };
  auto residual = [&](const Eigen::VectorXd& v) {
    const Eigen::VectorXd rhs = model.direct_rhs(to_state(v), u);
    Eigen::VectorXd F(nv);
    F.head(d.n - 1) = rhs.segment(1, d.n - 1);
    F.tail(4 * d.n) = rhs.segment(d.eq_t(), 4 * d.n);
    return F;
  };

  Eigen::VectorXd v0(nv);
  const Eigen::VectorXd delta_guess = delta_relative(model.topology(), x_guess.segment(d.eta(), d.m));
  v0.head(d.n - 1) = delta_guess.tail(d.n - 1);
  v0.tail(4 * d.n) = x_guess.segment(d.eq_t(), 4 * d.n);

  const NewtonResult nr = newton_solve(residual, v0, opts.newton);
  res.converged = nr.converged;
  res.residual_inf = nr.residual_inf;
  res.iterations = nr.iterations;
  res.message = nr.message;
  res.state = to_state(nr.v);
  if (res.converged) {
    res.hessian_min_eig = min_symmetric_eigenvalue(model.hessian(res.state, opts.hessian_fd_step));
    res.hessian_pd = res.hessian_min_eig > opts.psd_tol;
  }
  return res;
}

SteadyStateResult find_steady_state_closed(const ClosedLoopModel& cl, const Eigen::VectorXd& Pd,
                                           const Eigen::VectorXd& z_guess,
                                           const SteadyStateOptions& opts) {
  const MultiMachineModel& plant = cl.plant();
  const StateDims d = plant.dims();
  const int N = plant.state_dim();
  SteadyStateResult res;
  if (Pd.size() != d.n || z_guess.size() != cl.state_dim()) {
    res.message = "demand or guess dimension mismatch";
    return res;
  }

  // Unknowns: delta_rel (n-1), E (4n), vartheta (n). omega = 0 structurally,
  // so eta_dot = 0 and the vartheta rows sum to zero; the first vartheta row
  // is dropped to square the system.
  const int nv = 6 * d.n - 1;
  auto to_state = [&](const Eigen::VectorXd& v) {
    Eigen::VectorXd z = Eigen::VectorXd::Zero(cl.state_dim());
    z.segment(d.eta(), d.m) = eta_from_relative(plant.topology(), v.head(d.n - 1));
    z.segment(d.eq_t(), 4 * d.n) = v.segment(d.n - 1, 4 * d.n);
    z.tail(d.n) = v.tail(d.n);
    return z;
  };
  auto residual = [&](const Eigen::VectorXd& v) {
    const Eigen::VectorXd rhs = cl.rhs(to_state(v), Pd);
    Eigen::VectorXd F(nv);
    F.head(d.n) = rhs.head(d.n);                       // power balance, all n rows
    F.segment(d.n, 4 * d.n) = rhs.segment(d.eq_t(), 4 * d.n);
    F.tail(d.n - 1) = rhs.segment(N + 1, d.n - 1);     // consensus rows 2..n
    return F;
  };

  Eigen::VectorXd v0(nv);
  const Eigen::VectorXd delta_guess = delta_relative(plant.topology(), z_guess.segment(d.eta(), d.m));
  v0.head(d.n - 1) = delta_guess.tail(d.n - 1);
  v0.segment(d.n - 1, 4 * d.n) = z_guess.segment(d.eq_t(), 4 * d.n);
  v0.tail(d.n) = z_guess.tail(d.n);

  const NewtonResult nr = newton_solve(residual, v0, opts.newton);
  res.converged = nr.converged;
  res.residual_inf = nr.residual_inf;
  res.iterations = nr.iterations;
  res.message = nr.message;
  res.state = to_state(nr.v);
  if (res.converged) {
    // Closed-loop energy splits as H_p(x) + 0.5 vartheta^T T^-1 vartheta.
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(cl.state_dim(), cl.state_dim());
    H.topLeftCorner(N, N) = plant.hessian(res.state.head(N), opts.hessian_fd_step);
    H.bottomRightCorner(d.n, d.n) =
        cl.controller().T.cwiseInverse().asDiagonal().toDenseMatrix();
    res.hessian_min_eig = min_symmetric_eigenvalue(H);
    res.hessian_pd = res.hessian_min_eig > opts.psd_tol;
  }
  return res;
}

Eigen::VectorXd construct_open_loop_equilibrium(const MultiMachineModel& model,
                                                const Eigen::VectorXd& delta,
                                                Eigen::VectorXd& u_out) {
  const StateDims d = model.dims();
  if (delta.size() != d.n) throw std::invalid_argument("need one angle per machine");
  const Eigen::VectorXd eta = model.topology().incidence.transpose() * delta;

  // With omega = 0 and eta fixed the voltage equations are linear in
  // e = [Eq_t; Ed_t; Eq_s; Ed_s]. The current map is linear in E'' at fixed
  // eta; probe it column by column.
  Eigen::MatrixXd Cd = Eigen::MatrixXd::Zero(d.n, 2 * d.n);  // Id from [Eq_s; Ed_s]
  Eigen::MatrixXd Cq = Eigen::MatrixXd::Zero(d.n, 2 * d.n);  // Iq from [Eq_s; Ed_s]
  {
    Eigen::VectorXd probe = Eigen::VectorXd::Zero(d.size());
    probe.segment(d.eta(), d.m) = eta;
    Eigen::VectorXd Id(d.n), Iq(d.n);
    for (int j = 0; j < 2 * d.n; ++j) {
      const int idx = j < d.n ? d.eq_s() + j : d.ed_s() + (j - d.n);
      probe[idx] = 1.0;
      model.dq_currents(probe, Id, Iq);
      Cd.col(j) = Id;
      Cq.col(j) = Iq;
      probe[idx] = 0.0;
    }
  }

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(4 * d.n, 4 * d.n);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(4 * d.n);
  const auto& machines = model.machines();
  for (int i = 0; i < d.n; ++i) {
    const MachineParams& p = machines[static_cast<std::size_t>(i)];
    // Ef - Eq_t + (Xd - Xd_t) Id = 0
    A(i, i) = -1.0;
    A.row(i).tail(2 * d.n) += (p.Xd - p.Xd_t) * Cd.row(i);
    b[i] = -p.Ef;
    // -Ed_t - (Xq - Xq_t) Iq = 0
    A(d.n + i, d.n + i) = -1.0;
    A.row(d.n + i).tail(2 * d.n) -= (p.Xq - p.Xq_t) * Cq.row(i);
    // Eq_t - Eq_s + (Xd_t - Xd_s) Id = 0
    A(2 * d.n + i, i) = 1.0;
    A(2 * d.n + i, 2 * d.n + i) = -1.0;
    A.row(2 * d.n + i).tail(2 * d.n) += (p.Xd_t - p.Xd_s) * Cd.row(i);
    // Ed_t - Ed_s - (Xq_t - Xq_s) Iq = 0
    A(3 * d.n + i, d.n + i) = 1.0;
    A(3 * d.n + i, 3 * d.n + i) = -1.0;
    A.row(3 * d.n + i).tail(2 * d.n) -= (p.Xq_t - p.Xq_s) * Cq.row(i);
  }

  Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
  if (!lu.isInvertible()) {
    throw std::runtime_error("voltage equations are singular at the requested angles");
  }
  const Eigen::VectorXd e = lu.solve(b);

  Eigen::VectorXd x = Eigen::VectorXd::Zero(d.size());
  x.segment(d.eta(), d.m) = eta;
  x.segment(d.eq_t(), d.n) = e.head(d.n);
  x.segment(d.ed_t(), d.n) = e.segment(d.n, d.n);
  x.segment(d.eq_s(), d.n) = e.segment(2 * d.n, d.n);
  x.segment(d.ed_s(), d.n) = e.tail(d.n);
  u_out = model.electrical_power(x);
  return x;
}

}  // namespace phgrid
