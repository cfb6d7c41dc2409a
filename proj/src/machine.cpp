#include "phgrid/machine.hpp"

#include <cmath>
#include <sstream>

namespace phgrid {

namespace {

void require(std::vector<std::string>& out, bool ok, const std::string& msg) {
  if (!ok) out.push_back(msg);
}

}  // namespace

std::vector<std::string> validate_machine(const MachineParams& p) {
  std::vector<std::string> out;
  require(out, p.M > 0.0, "M must be positive");
  require(out, p.Xd_s > 0.0, "Xd_s must be positive");
  require(out, p.Xd_t > p.Xd_s, "reactance ordering violated: need Xd_t > Xd_s");
  require(out, p.Xd > p.Xd_t, "reactance ordering violated: need Xd > Xd_t");
  require(out, p.Xq_s > 0.0, "Xq_s must be positive");
  require(out, p.Xq_t > p.Xq_s, "reactance ordering violated: need Xq_t > Xq_s");
  require(out, p.Xq > p.Xq_t, "reactance ordering violated: need Xq > Xq_t");
  require(out, p.Xd_s == p.Xq_s, "negligible subtransient saliency requires Xd_s == Xq_s");
  require(out, p.Td0_t > 0.0, "Td0_t must be positive");
  require(out, p.Tq0_t > 0.0, "Tq0_t must be positive");
  require(out, p.Td0_s > 0.0, "Td0_s must be positive");
  require(out, p.Tq0_s > 0.0, "Tq0_s must be positive");
  require(out, std::isfinite(p.Ef), "Ef must be finite");
  return out;
}

SubtransientCheck check_subtransient_condition(const MachineParams& p) {
  SubtransientCheck c;
  c.d_margin = 4.0 * (p.Xd_t - p.Xd_s) * p.Td0_t - (p.Xd - p.Xd_t) * p.Td0_s;
  c.q_margin = 4.0 * (p.Xq_t - p.Xq_s) * p.Tq0_t - (p.Xq - p.Xq_t) * p.Tq0_s;
  c.d_ok = c.d_margin > 0.0;
  c.q_ok = c.q_margin > 0.0;
  return c;
}

std::vector<SubtransientCheck> check_subtransient_condition(
    const std::vector<MachineParams>& machines) {
  std::vector<SubtransientCheck> out;
  out.reserve(machines.size());
  for (const MachineParams& p : machines) out.push_back(check_subtransient_condition(p));
  return out;
}

}  // namespace phgrid
