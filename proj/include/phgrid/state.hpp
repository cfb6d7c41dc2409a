#pragma once

#include <Eigen/Dense>

namespace phgrid {

/// Offsets of the stacked plant state [p, eta, Eq_t, Ed_t, Eq_s, Ed_s].
/// p are angular momenta (p = M*omega), eta the edge angle differences
/// eta = D^T delta, and the E blocks the internal voltages.
struct StateDims {
  int n = 0;  // machines
  int m = 0;  // edges

  int size() const { return 5 * n + m; }
  int p() const { return 0; }
  int eta() const { return n; }
  int eq_t() const { return n + m; }
  int ed_t() const { return 2 * n + m; }
  int eq_s() const { return 3 * n + m; }
  int ed_s() const { return 4 * n + m; }
};

/// Named view of one plant state, for construction and reporting. Hot paths
/// operate on the flat vector directly.
struct SystemState {
  Eigen::VectorXd p, eta, Eq_t, Ed_t, Eq_s, Ed_s;

  static SystemState unpack(const StateDims& d, const Eigen::VectorXd& x) {
    SystemState s;
    s.p = x.segment(d.p(), d.n);
    s.eta = x.segment(d.eta(), d.m);
    s.Eq_t = x.segment(d.eq_t(), d.n);
    s.Ed_t = x.segment(d.ed_t(), d.n);
    s.Eq_s = x.segment(d.eq_s(), d.n);
    s.Ed_s = x.segment(d.ed_s(), d.n);
    return s;
  }

  Eigen::VectorXd pack() const {
    Eigen::VectorXd x(5 * p.size() + eta.size());
    x << p, eta, Eq_t, Ed_t, Eq_s, Ed_s;
    return x;
  }
};

}  // namespace phgrid
