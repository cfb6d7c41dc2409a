#pragma once

#include <utility>

#include <Eigen/Dense>

#include "phgrid/machine.hpp"

namespace phgrid {

/// Per-component energies of one state. H_p is the plant total, H_c the
/// controller storage 0.5 * vartheta^T T^-1 vartheta when a controller state
/// is part of the evaluation (0 otherwise). Energies carry units of power:
/// the synchronous-frequency scaling is absorbed into the definitions.
struct EnergyBreakdown {
  Eigen::VectorXd H_ed, H_eq;  // per machine, d- and q-axis electrical
  Eigen::VectorXd H_m;         // per machine kinetic
  Eigen::VectorXd H_line;      // per edge
  double H_p = 0.0;
  double H_c = 0.0;
  double total() const { return H_p + H_c; }
};

/// Electrical energy stored in the transient reactance drops of one machine,
/// returned as (H_ed, H_eq):
///   H_ed = 0.5 [ (Eq_t - Ef)^2/(Xd - Xd_t) + (Eq_t - Eq_s)^2/(Xd_t - Xd_s) ]
///   H_eq = 0.5 [ Ed_t^2/(Xq - Xq_t) + (Ed_t - Ed_s)^2/(Xq_t - Xq_s) ]
std::pair<double, double> machine_electrical_energy(const MachineParams& p, double Eq_t,
                                                    double Ed_t, double Eq_s, double Ed_s);

/// Kinetic energy p^2 / (2M) of one machine.
double kinetic_energy(double p, double M);

/// Componentwise kinetic energies.
Eigen::VectorXd kinetic_energy(const Eigen::VectorXd& p, const Eigen::VectorXd& M);

/// Stored energy of one inductive line between subtransient buses i (positive
/// end) and k, with eta_l = delta_i - delta_k and B_ik = -1/X_l < 0. Equals
/// 0.5 X_l |I_l|^2 and is therefore nonnegative.
double line_energy(double eta_l, double Eds_i, double Eqs_i, double Eds_k, double Eqs_k,
                   double B_ik);

/// d/d(eta_l) of line_energy.
double line_energy_deta(double eta_l, double Eds_i, double Eqs_i, double Eds_k, double Eqs_k,
                        double B_ik);

}  // namespace phgrid
