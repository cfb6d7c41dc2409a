#include "phgrid/energy.hpp"

#include <cmath>
#include <stdexcept>

namespace phgrid {

std::pair<double, double> machine_electrical_energy(const MachineParams& p, double Eq_t,
                                                    double Ed_t, double Eq_s, double Ed_s) {
  const double dq1 = Eq_t - p.Ef;
  const double dq2 = Eq_t - Eq_s;
  const double dd2 = Ed_t - Ed_s;
  const double H_ed = 0.5 * (dq1 * dq1 / (p.Xd - p.Xd_t) + dq2 * dq2 / (p.Xd_t - p.Xd_s));
  const double H_eq = 0.5 * (Ed_t * Ed_t / (p.Xq - p.Xq_t) + dd2 * dd2 / (p.Xq_t - p.Xq_s));
  return {H_ed, H_eq};
}

double kinetic_energy(double p, double M) { return p * p / (2.0 * M); }

Eigen::VectorXd kinetic_energy(const Eigen::VectorXd& p, const Eigen::VectorXd& M) {
  if (p.size() != M.size()) throw std::invalid_argument("momentum/inertia size mismatch");
  return p.array().square() / (2.0 * M.array());
}

double line_energy(double eta_l, double Eds_i, double Eqs_i, double Eds_k, double Eqs_k,
                   double B_ik) {
  const double s = std::sin(eta_l);
  const double c = std::cos(eta_l);
  return -0.5 * B_ik *
         (2.0 * (Eds_i * Eqs_k - Eds_k * Eqs_i) * s - 2.0 * (Eds_i * Eds_k + Eqs_i * Eqs_k) * c +
          Eds_i * Eds_i + Eds_k * Eds_k + Eqs_i * Eqs_i + Eqs_k * Eqs_k);
}

double line_energy_deta(double eta_l, double Eds_i, double Eqs_i, double Eds_k, double Eqs_k,
                        double B_ik) {
  const double s = std::sin(eta_l);
  const double c = std::cos(eta_l);
  return -B_ik * ((Eds_i * Eqs_k - Eds_k * Eqs_i) * c + (Eds_i * Eds_k + Eqs_i * Eqs_k) * s);
}

}  // namespace phgrid
