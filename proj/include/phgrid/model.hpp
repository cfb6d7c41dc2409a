#pragma once

#include <vector>

#include <Eigen/Dense>

#include "phgrid/energy.hpp"
#include "phgrid/machine.hpp"
#include "phgrid/network.hpp"
#include "phgrid/state.hpp"

namespace phgrid {

/// Constant interconnection and dissipation structure of the multi-machine
/// system: x_dot = (J - R) grad H + g u with g selecting the momentum block.
/// A = J - R is the assembled block matrix; J is exactly skew and R exactly
/// symmetric by construction. R is PSD iff the subtransient condition holds
/// on both axes of every machine.
struct PHStructure {
  int n = 0;
  int m = 0;
  Eigen::MatrixXd J;
  Eigen::MatrixXd R;
  Eigen::MatrixXd A;  // J - R

  int dim() const { return 5 * n + m; }
};

/// Shifted input/output pair of the momentum port.
struct PortVariables {
  Eigen::VectorXd u;  // P_m - P_d per machine
  Eigen::VectorXd y;  // omega = g^T grad H
};

/// n interconnected sixth-order machines over a lossless network. All
/// methods are pure functions of their arguments; instances are immutable
/// after construction and safe to share across threads.
class MultiMachineModel {
 public:
  MultiMachineModel(NetworkTopology topo, std::vector<MachineParams> machines);

  const NetworkTopology& topology() const { return topo_; }
  const std::vector<MachineParams>& machines() const { return machines_; }
  StateDims dims() const { return {topo_.n, topo_.m()}; }
  int n() const { return topo_.n; }
  int m() const { return topo_.m(); }
  int state_dim() const { return dims().size(); }
  const Eigen::VectorXd& inertia() const { return M_; }
  const Eigen::VectorXd& excitation() const { return Ef_; }

  EnergyBreakdown energy(const Eigen::VectorXd& x) const;
  double hamiltonian(const Eigen::VectorXd& x) const;
  Eigen::VectorXd grad_hamiltonian(const Eigen::VectorXd& x) const;

  /// Central finite differences of the analytic gradient; near-symmetric,
  /// consumers should use the self-adjoint part for eigenvalues.
  Eigen::MatrixXd hessian(const Eigen::VectorXd& x, double fd_step = 1e-6) const;

  /// H(x) - (x - xbar)^T grad H(xbar) - H(xbar); local storage function
  /// around a steady state xbar with positive definite Hessian.
  double shifted_hamiltonian(const Eigen::VectorXd& x, const Eigen::VectorXd& xbar) const;

  /// dq currents entering each generator, from the network equations.
  void dq_currents(const Eigen::VectorXd& x, Eigen::VectorXd& Id, Eigen::VectorXd& Iq) const;

  /// P_e per machine; sums to zero over the lossless network.
  Eigen::VectorXd electrical_power(const Eigen::VectorXd& x) const;

  /// Six-machine-equation right-hand side evaluated directly from the
  /// neighbor sums, independent of the port-Hamiltonian route.
  Eigen::VectorXd direct_rhs(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const;

  PHStructure assemble_ph() const;

  /// x_dot = (J - R) grad H(x) + g u; optionally reports y = g^T grad H.
  Eigen::VectorXd ph_rhs(const PHStructure& ph, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& u, Eigen::VectorXd* y = nullptr) const;

 private:
  NetworkTopology topo_;
  std::vector<MachineParams> machines_;
  // cached parameter vectors; dX* are the reactance gaps Xd-Xd_t, Xd_t-Xd_s, ...
  Eigen::VectorXd M_, Ef_;
  Eigen::VectorXd dXd_, dXq_, dXd_t_, dXq_t_;
  Eigen::VectorXd Td0t_, Tq0t_, Td0s_, Tq0s_;
  Eigen::VectorXd Bii_;
};

/// Terminal voltages behind the subtransient reactance: V_q = Eq_s - Xd_s*I_d,
/// V_d = Ed_s + Xd_s*I_q, componentwise.
void terminal_voltage(const Eigen::VectorXd& Ed_s, const Eigen::VectorXd& Eq_s,
                      const Eigen::VectorXd& Id, const Eigen::VectorXd& Iq,
                      const Eigen::VectorXd& Xd_s, Eigen::VectorXd& Vd, Eigen::VectorXd& Vq);

/// P_e = Ed_s.*Id + Eq_s.*Iq.
Eigen::VectorXd electrical_power(const Eigen::VectorXd& Ed_s, const Eigen::VectorXd& Eq_s,
                                 const Eigen::VectorXd& Id, const Eigen::VectorXd& Iq);

/// Quadratic dissipation -grad^T R grad; nonpositive whenever R is PSD.
double dissipation_rate(const Eigen::MatrixXd& R, const Eigen::VectorXd& grad);

}  // namespace phgrid
