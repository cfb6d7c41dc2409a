#include "phgrid/integrate.hpp"

#include <algorithm>
#include <cmath>

namespace phgrid {

namespace {

struct Recorder {
  Trajectory* traj;
  int stride;
  long last_recorded_step = 0;

  void record(long step, double t, const Eigen::VectorXd& x) {
    traj->t.push_back(t);
    traj->x.push_back(x);
    last_recorded_step = step;
  }

  void on_accept(long step, double t, const Eigen::VectorXd& x) {
    if (step % stride == 0) record(step, t, x);
  }

  void finish(long step, double t, const Eigen::VectorXd& x) {
    if (last_recorded_step != step) record(step, t, x);
  }
};

IntegrationResult run_rk4(const RhsFn& rhs, const Eigen::VectorXd& x0,
                          const IntegratorConfig& cfg) {
  IntegrationResult res;
  Recorder rec{&res.traj, std::max(cfg.record_stride, 1)};

  Eigen::VectorXd x = x0;
  double t = 0.0;
  rec.record(0, t, x);

  const Eigen::Index N = x.size();
  Eigen::VectorXd k1(N), k2(N), k3(N), k4(N), xs(N);
  long step = 0;
  while (t < cfg.t_end - 1e-12 * std::max(1.0, cfg.t_end)) {
    if (step >= cfg.max_steps) {
      res.status = IntegrationStatus::step_limit;
      res.failure_time = t;
      res.steps_accepted = step;
      return res;
    }
    const double h = std::min(cfg.dt, cfg.t_end - t);
    rhs(t, x, k1);
    xs = x + 0.5 * h * k1;
    rhs(t + 0.5 * h, xs, k2);
    xs = x + 0.5 * h * k2;
    rhs(t + 0.5 * h, xs, k3);
    xs = x + h * k3;
    rhs(t + h, xs, k4);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    res.rhs_evaluations += 4;
    t += h;
    ++step;
    if (!x.allFinite()) {
      res.status = IntegrationStatus::non_finite_state;
      res.failure_time = t;
      res.steps_accepted = step;
      return res;
    }
    rec.on_accept(step, t, x);
  }
  res.steps_accepted = step;
  rec.finish(step, t, x);
  return res;
}

// Dormand-Prince 5(4) tableau; the last stage is the next step's first (FSAL).
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
// b (5th order) minus b-hat (4th order), applied to stages 1..7
constexpr double e1 = b1 - 5179.0 / 57600;
constexpr double e3 = b3 - 7571.0 / 16695;
constexpr double e4 = b4 - 393.0 / 640;
constexpr double e5 = b5 + 92097.0 / 339200;
constexpr double e6 = b6 - 187.0 / 2100;
constexpr double e7 = -1.0 / 40;

IntegrationResult run_rk45(const RhsFn& rhs, const Eigen::VectorXd& x0,
                           const IntegratorConfig& cfg) {
  IntegrationResult res;
  Recorder rec{&res.traj, std::max(cfg.record_stride, 1)};

  Eigen::VectorXd x = x0;
  double t = 0.0;
  rec.record(0, t, x);

  const Eigen::Index N = x.size();
  Eigen::VectorXd k1(N), k2(N), k3(N), k4(N), k5(N), k6(N), k7(N), xs(N), xnew(N), err(N);
  rhs(t, x, k1);
  res.rhs_evaluations += 1;

  double h = std::min(cfg.dt, std::min(cfg.max_dt, cfg.t_end));
  bool last_reject_nonfinite = false;
  long step = 0;
  while (t < cfg.t_end - 1e-12 * std::max(1.0, cfg.t_end)) {
    if (step + res.steps_rejected >= cfg.max_steps) {
      res.status = IntegrationStatus::step_limit;
      res.failure_time = t;
      res.steps_accepted = step;
      return res;
    }
    if (h < 1e-14 * std::max(1.0, std::abs(t))) {
      res.status = last_reject_nonfinite ? IntegrationStatus::non_finite_state
                                         : IntegrationStatus::step_underflow;
      res.failure_time = t;
      res.steps_accepted = step;
      return res;
    }
    h = std::min(h, cfg.t_end - t);

    xs = x + h * (a21 * k1);
    rhs(t + h / 5.0, xs, k2);
    xs = x + h * (a31 * k1 + a32 * k2);
    rhs(t + 3.0 * h / 10.0, xs, k3);
    xs = x + h * (a41 * k1 + a42 * k2 + a43 * k3);
    rhs(t + 4.0 * h / 5.0, xs, k4);
    xs = x + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    rhs(t + 8.0 * h / 9.0, xs, k5);
    xs = x + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    rhs(t + h, xs, k6);
    xnew = x + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    rhs(t + h, xnew, k7);
    res.rhs_evaluations += 6;

    if (!xnew.allFinite() || !k7.allFinite()) {
      res.steps_rejected += 1;
      last_reject_nonfinite = true;
      h *= 0.2;
      continue;
    }

    err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < N; ++i) {
      const double sc = cfg.atol + cfg.rtol * std::max(std::abs(x[i]), std::abs(xnew[i]));
      const double q = err[i] / sc;
      acc += q * q;
    }
    const double err_norm = std::sqrt(acc / static_cast<double>(N));
    if (!std::isfinite(err_norm)) {
      res.steps_rejected += 1;
      last_reject_nonfinite = true;
      h *= 0.2;
      continue;
    }

    const double factor =
        err_norm == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err_norm, -0.2), 0.2, 5.0);
    if (err_norm <= 1.0) {
      t += h;
      x.swap(xnew);
      k1.swap(k7);  // FSAL
      ++step;
      last_reject_nonfinite = false;
      rec.on_accept(step, t, x);
      h = std::min(h * factor, cfg.max_dt);
    } else {
      res.steps_rejected += 1;
      h *= factor;
    }
  }
  res.steps_accepted = step;
  rec.finish(step, t, x);
  return res;
}

}  // namespace

IntegrationResult integrate(const RhsFn& rhs, const Eigen::VectorXd& x0,
                            const IntegratorConfig& cfg) {
  if (cfg.t_end <= 0.0) {
    IntegrationResult res;
    res.traj.t.push_back(0.0);
    res.traj.x.push_back(x0);
    return res;
  }
  return cfg.method == IntegratorMethod::rk4 ? run_rk4(rhs, x0, cfg) : run_rk45(rhs, x0, cfg);
}

const char* to_string(IntegrationStatus s) {
  switch (s) {
    case IntegrationStatus::ok:
      return "ok";
    case IntegrationStatus::non_finite_state:
      return "non_finite_state";
    case IntegrationStatus::step_underflow:
      return "step_underflow";
    case IntegrationStatus::step_limit:
      return "step_limit";
  }
  return "unknown";
}

}  // namespace phgrid
