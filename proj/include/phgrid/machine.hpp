#pragma once

#include <string>
#include <vector>

namespace phgrid {

/// Per-unit constants of one round-rotor synchronous machine.
/// Suffix _t marks transient, _s subtransient quantities; Td0/Tq0 are the
/// open-circuit time constants in seconds. Required orderings:
/// Xd > Xd_t > Xd_s > 0, Xq > Xq_t > Xq_s > 0, and Xd_s == Xq_s (negligible
/// subtransient saliency).
struct MachineParams {
  double M = 0.0;  // inertia, p.u. power * s^2
  double Xd = 0.0, Xq = 0.0;
  double Xd_t = 0.0, Xq_t = 0.0;
  double Xd_s = 0.0, Xq_s = 0.0;
  double Td0_t = 0.0, Tq0_t = 0.0;
  double Td0_s = 0.0, Tq0_s = 0.0;
  double Ef = 0.0;  // constant excitation voltage, p.u.
};

/// All violated parameter invariants, one message per rule; empty when valid.
std::vector<std::string> validate_machine(const MachineParams& p);

/// Schur-complement condition for the electrical dissipation block to be
/// positive definite, per axis. Margins are
///   d: 4(Xd_t - Xd_s)Td0_t - (Xd - Xd_t)Td0_s
///   q: 4(Xq_t - Xq_s)Tq0_t - (Xq - Xq_t)Tq0_s
/// and the condition requires them strictly positive.
struct SubtransientCheck {
  double d_margin = 0.0;
  double q_margin = 0.0;
  bool d_ok = false;
  bool q_ok = false;
  bool ok() const { return d_ok && q_ok; }
};

SubtransientCheck check_subtransient_condition(const MachineParams& p);
std::vector<SubtransientCheck> check_subtransient_condition(const std::vector<MachineParams>& machines);

}  // namespace phgrid
