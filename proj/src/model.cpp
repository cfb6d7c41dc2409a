#include "phgrid/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace phgrid {

MultiMachineModel::MultiMachineModel(NetworkTopology topo, std::vector<MachineParams> machines)
    : topo_(std::move(topo)), machines_(std::move(machines)) {
  const int n = topo_.n;
  if (static_cast<int>(machines_.size()) != n) {
    throw std::invalid_argument("machine count does not match topology");
  }
  for (int i = 0; i < n; ++i) {
    const auto issues = validate_machine(machines_[static_cast<std::size_t>(i)]);
    if (!issues.empty()) {
      throw std::invalid_argument("machine " + std::to_string(i + 1) + ": " + issues.front());
    }
  }

  M_.resize(n);
  Ef_.resize(n);
  dXd_.resize(n);
  dXq_.resize(n);
  dXd_t_.resize(n);
  dXq_t_.resize(n);
  Td0t_.resize(n);
  Tq0t_.resize(n);
  Td0s_.resize(n);
  Tq0s_.resize(n);
  for (int i = 0; i < n; ++i) {
    const MachineParams& p = machines_[static_cast<std::size_t>(i)];
    M_[i] = p.M;
    Ef_[i] = p.Ef;
    dXd_[i] = p.Xd - p.Xd_t;
    dXq_[i] = p.Xq - p.Xq_t;
    dXd_t_[i] = p.Xd_t - p.Xd_s;
    dXq_t_[i] = p.Xq_t - p.Xq_s;
    Td0t_[i] = p.Td0_t;
    Tq0t_[i] = p.Tq0_t;
    Td0s_[i] = p.Td0_s;
    Tq0s_[i] = p.Tq0_s;
  }
  Bii_ = topo_.susceptance.diagonal();

  // The susceptances must have been built with these machines' subtransient
  // reactances, otherwise currents and energies disagree.
  for (int l = 0; l < topo_.m(); ++l) {
    const EdgeSpec& e = topo_.edges[static_cast<std::size_t>(l)];
    const double X_l = machines_[static_cast<std::size_t>(e.from)].Xd_s + e.reactance +
                       machines_[static_cast<std::size_t>(e.to)].Xd_s;
    const double expected = -1.0 / X_l;
    if (std::abs(topo_.edge_susceptance[l] - expected) > 1e-12 * std::abs(expected)) {
      throw std::invalid_argument("topology susceptance of edge " + std::to_string(l + 1) +
                                  " was not built from these machine parameters");
    }
  }
}

EnergyBreakdown MultiMachineModel::energy(const Eigen::VectorXd& x) const {
  const StateDims d = dims();
  if (x.size() != d.size()) throw std::invalid_argument("state dimension mismatch");
  EnergyBreakdown out;
  out.H_ed.resize(d.n);
  out.H_eq.resize(d.n);
  out.H_m = kinetic_energy(x.segment(d.p(), d.n), M_);
  out.H_line.resize(d.m);

  for (int i = 0; i < d.n; ++i) {
    const auto [hed, heq] =
        machine_electrical_energy(machines_[static_cast<std::size_t>(i)], x[d.eq_t() + i],
                                  x[d.ed_t() + i], x[d.eq_s() + i], x[d.ed_s() + i]);
    out.H_ed[i] = hed;
    out.H_eq[i] = heq;
  }
  for (int l = 0; l < d.m; ++l) {
    const EdgeSpec& e = topo_.edges[static_cast<std::size_t>(l)];
    out.H_line[l] =
        line_energy(x[d.eta() + l], x[d.ed_s() + e.from], x[d.eq_s() + e.from],
                    x[d.ed_s() + e.to], x[d.eq_s() + e.to], topo_.edge_susceptance[l]);
  }
  out.H_p = out.H_ed.sum() + out.H_eq.sum() + out.H_m.sum() + out.H_line.sum();
  out.H_c = 0.0;
  return out;
}

double MultiMachineModel::hamiltonian(const Eigen::VectorXd& x) const { return energy(x).H_p; }

Eigen::VectorXd MultiMachineModel::grad_hamiltonian(const Eigen::VectorXd& x) const {
  const StateDims d = dims();
  if (x.size() != d.size()) throw std::invalid_argument("state dimension mismatch");
  Eigen::VectorXd g(d.size());

  g.segment(d.p(), d.n) = x.segment(d.p(), d.n).array() / M_.array();

  for (int l = 0; l < d.m; ++l) {
    const EdgeSpec& e = topo_.edges[static_cast<std::size_t>(l)];
    g[d.eta() + l] =
        line_energy_deta(x[d.eta() + l], x[d.ed_s() + e.from], x[d.eq_s() + e.from],
                         x[d.ed_s() + e.to], x[d.eq_s() + e.to], topo_.edge_susceptance[l]);
  }

  const auto Eq_t = x.segment(d.eq_t(), d.n).array();
  const auto Ed_t = x.segment(d.ed_t(), d.n).array();
  const auto Eq_s = x.segment(d.eq_s(), d.n).array();
  const auto Ed_s = x.segment(d.ed_s(), d.n).array();

  Eigen::VectorXd Id(d.n), Iq(d.n);
  dq_currents(x, Id, Iq);

  g.segment(d.eq_t(), d.n) =
      (Eq_t - Ef_.array()) / dXd_.array() + (Eq_t - Eq_s) / dXd_t_.array();
  g.segment(d.ed_t(), d.n) = Ed_t / dXq_.array() + (Ed_t - Ed_s) / dXq_t_.array();
  g.segment(d.eq_s(), d.n) = -(Eq_t - Eq_s) / dXd_t_.array() - Id.array();
  g.segment(d.ed_s(), d.n) = -(Ed_t - Ed_s) / dXq_t_.array() + Iq.array();
  return g;
}

Eigen::MatrixXd MultiMachineModel::hessian(const Eigen::VectorXd& x, double fd_step) const {
  const Eigen::Index N = x.size();
  Eigen::MatrixXd H(N, N);
  Eigen::VectorXd xp = x, xm = x;
  for (Eigen::Index j = 0; j < N; ++j) {
    xp[j] = x[j] + fd_step;
    xm[j] = x[j] - fd_step;
    H.col(j) = (grad_hamiltonian(xp) - grad_hamiltonian(xm)) / (2.0 * fd_step);
    xp[j] = x[j];
    xm[j] = x[j];
  }
  return H;
}

double MultiMachineModel::shifted_hamiltonian(const Eigen::VectorXd& x,
                                              const Eigen::VectorXd& xbar) const {
  return hamiltonian(x) - (x - xbar).dot(grad_hamiltonian(xbar)) - hamiltonian(xbar);
}

void MultiMachineModel::dq_currents(const Eigen::VectorXd& x, Eigen::VectorXd& Id,
                                    Eigen::VectorXd& Iq) const {
  const StateDims d = dims();
  Id = Bii_.array() * x.segment(d.eq_s(), d.n).array();
  Iq = -Bii_.array() * x.segment(d.ed_s(), d.n).array();
  for (int l = 0; l < d.m; ++l) {
    const EdgeSpec& e = topo_.edges[static_cast<std::size_t>(l)];
    const double B_l = topo_.edge_susceptance[l];
    const double s = std::sin(x[d.eta() + l]);  // sin(delta_i - delta_k), i = e.from
    const double c = std::cos(x[d.eta() + l]);
    const double Edi = x[d.ed_s() + e.from], Eqi = x[d.eq_s() + e.from];
    const double Edk = x[d.ed_s() + e.to], Eqk = x[d.eq_s() + e.to];
    Id[e.from] -= B_l * (Edk * s + Eqk * c);
    Iq[e.from] -= B_l * (Eqk * s - Edk * c);
    Id[e.to] -= B_l * (-Edi * s + Eqi * c);
    Iq[e.to] -= B_l * (-Eqi * s - Edi * c);
  }
}

Eigen::VectorXd MultiMachineModel::electrical_power(const Eigen::VectorXd& x) const {
  const StateDims d = dims();
  Eigen::VectorXd Id, Iq;
  dq_currents(x, Id, Iq);
  return phgrid::electrical_power(x.segment(d.ed_s(), d.n), x.segment(d.eq_s(), d.n), Id, Iq);
}

Eigen::VectorXd MultiMachineModel::direct_rhs(const Eigen::VectorXd& x,
                                              const Eigen::VectorXd& u) const {
  const StateDims d = dims();
  if (x.size() != d.size() || u.size() != d.n) {
    throw std::invalid_argument("state or input dimension mismatch");
  }
  Eigen::VectorXd dx(d.size());

  // Per-edge neighbor sums accumulated independently of the pH route:
  // cd_i = sum_k B_ik (E_dk'' sin d_ik + E_qk'' cos d_ik), cq_i analogous.
  Eigen::VectorXd cd = Eigen::VectorXd::Zero(d.n);
  Eigen::VectorXd cq = Eigen::VectorXd::Zero(d.n);
  Eigen::VectorXd pe = Eigen::VectorXd::Zero(d.n);
  for (int l = 0; l < d.m; ++l) {
    const EdgeSpec& e = topo_.edges[static_cast<std::size_t>(l)];
    const double B_l = topo_.edge_susceptance[l];
    const double s = std::sin(x[d.eta() + l]);
    const double c = std::cos(x[d.eta() + l]);
    const double Edi = x[d.ed_s() + e.from], Eqi = x[d.eq_s() + e.from];
    const double Edk = x[d.ed_s() + e.to], Eqk = x[d.eq_s() + e.to];
    // i side sees delta_ik = eta_l, k side sees -eta_l
    cd[e.from] += B_l * (Edk * s + Eqk * c);
    cq[e.from] += B_l * (Edk * c - Eqk * s);
    cd[e.to] += B_l * (-Edi * s + Eqi * c);
    cq[e.to] += B_l * (Edi * c + Eqi * s);
    const double transfer = (Edi * Edk + Eqi * Eqk) * s + (Edi * Eqk - Eqi * Edk) * c;
    pe[e.from] -= B_l * transfer;
    pe[e.to] += B_l * transfer;
  }

  const auto Eq_t = x.segment(d.eq_t(), d.n).array();
  const auto Ed_t = x.segment(d.ed_t(), d.n).array();
  const auto Eq_s = x.segment(d.eq_s(), d.n).array();
  const auto Ed_s = x.segment(d.ed_s(), d.n).array();
  const Eigen::ArrayXd id = Bii_.array() * Eq_s - cd.array();
  const Eigen::ArrayXd iq = Bii_.array() * Ed_s - cq.array();

  dx.segment(d.p(), d.n) = u - pe;
  const Eigen::VectorXd omega = x.segment(d.p(), d.n).array() / M_.array();
  for (int l = 0; l < d.m; ++l) {
    const EdgeSpec& e = topo_.edges[static_cast<std::size_t>(l)];
    dx[d.eta() + l] = omega[e.from] - omega[e.to];
  }
  dx.segment(d.eq_t(), d.n) = (Ef_.array() - Eq_t + dXd_.array() * id) / Td0t_.array();
  dx.segment(d.ed_t(), d.n) = (-Ed_t + dXq_.array() * iq) / Tq0t_.array();
  dx.segment(d.eq_s(), d.n) = (Eq_t - Eq_s + dXd_t_.array() * id) / Td0s_.array();
  dx.segment(d.ed_s(), d.n) = (Ed_t - Ed_s + dXq_t_.array() * iq) / Tq0s_.array();
  return dx;
}

PHStructure MultiMachineModel::assemble_ph() const {
  const StateDims d = dims();
  PHStructure ph;
  ph.n = d.n;
  ph.m = d.m;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(d.size(), d.size());
  A.block(d.p(), d.eta(), d.n, d.m) = -topo_.incidence;
  A.block(d.eta(), d.p(), d.m, d.n) = topo_.incidence.transpose();
  for (int i = 0; i < d.n; ++i) {
    A(d.eq_t() + i, d.eq_t() + i) = -dXd_[i] / Td0t_[i];
    A(d.eq_t() + i, d.eq_s() + i) = -dXd_[i] / Td0t_[i];
    A(d.ed_t() + i, d.ed_t() + i) = -dXq_[i] / Tq0t_[i];
    A(d.ed_t() + i, d.ed_s() + i) = -dXq_[i] / Tq0t_[i];
    A(d.eq_s() + i, d.eq_s() + i) = -dXd_t_[i] / Td0s_[i];
    A(d.ed_s() + i, d.ed_s() + i) = -dXq_t_[i] / Tq0s_[i];
  }
  ph.J = 0.5 * (A - A.transpose());
  ph.R = -0.5 * (A + A.transpose());
  ph.A = std::move(A);
  return ph;
}

Eigen::VectorXd MultiMachineModel::ph_rhs(const PHStructure& ph, const Eigen::VectorXd& x,
                                          const Eigen::VectorXd& u, Eigen::VectorXd* y) const {
  const StateDims d = dims();
  if (ph.dim() != d.size() || x.size() != d.size() || u.size() != d.n) {
    throw std::invalid_argument("pH structure, state, or input dimension mismatch");
  }
  const Eigen::VectorXd grad = grad_hamiltonian(x);
  Eigen::VectorXd dx = ph.A * grad;
  dx.segment(d.p(), d.n) += u;
  if (y != nullptr) *y = grad.segment(d.p(), d.n);
  return dx;
}

void terminal_voltage(const Eigen::VectorXd& Ed_s, const Eigen::VectorXd& Eq_s,
                      const Eigen::VectorXd& Id, const Eigen::VectorXd& Iq,
                      const Eigen::VectorXd& Xd_s, Eigen::VectorXd& Vd, Eigen::VectorXd& Vq) {
  Vq = Eq_s.array() - Xd_s.array() * Id.array();
  Vd = Ed_s.array() + Xd_s.array() * Iq.array();
}

Eigen::VectorXd electrical_power(const Eigen::VectorXd& Ed_s, const Eigen::VectorXd& Eq_s,
                                 const Eigen::VectorXd& Id, const Eigen::VectorXd& Iq) {
  return Ed_s.array() * Id.array() + Eq_s.array() * Iq.array();
}

double dissipation_rate(const Eigen::MatrixXd& R, const Eigen::VectorXd& grad) {
  return -grad.dot(R * grad);
}

}  // namespace phgrid
