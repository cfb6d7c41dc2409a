#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace phgrid {

enum class IntegratorMethod { rk4, rk45 };

struct IntegratorConfig {
  IntegratorMethod method = IntegratorMethod::rk45;
  double dt = 1e-3;     // rk4 step
  double rtol = 1e-8;   // rk45 relative tolerance
  double atol = 1e-10;  // rk45 absolute tolerance
  double t_end = 10.0;
  int record_stride = 1;  // record every k-th accepted step (step 0 and the end always)
  double max_dt = 1.0;
  long max_steps = 50'000'000;
};

enum class IntegrationStatus { ok, non_finite_state, step_underflow, step_limit };

struct Trajectory {
  std::vector<double> t;
  std::vector<Eigen::VectorXd> x;

  int samples() const { return static_cast<int>(t.size()); }
};

struct IntegrationResult {
  Trajectory traj;
  IntegrationStatus status = IntegrationStatus::ok;
  double failure_time = 0.0;  // meaningful unless status == ok
  long steps_accepted = 0;
  long steps_rejected = 0;
  long rhs_evaluations = 0;

  bool ok() const { return status == IntegrationStatus::ok; }
};

using RhsFn = std::function<void(double t, const Eigen::VectorXd& x, Eigen::VectorXd& dxdt)>;

/// Classical RK4 at fixed dt or embedded Dormand-Prince 5(4) with step
/// control. Aborts with a diagnostic status when the state stops being
/// finite or the adaptive step underflows.
IntegrationResult integrate(const RhsFn& rhs, const Eigen::VectorXd& x0,
                            const IntegratorConfig& cfg);

const char* to_string(IntegrationStatus s);

}  // namespace phgrid
