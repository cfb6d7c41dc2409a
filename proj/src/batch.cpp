#include "phgrid/batch.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace phgrid {

namespace {

void check_ensemble(const MultiMachineModel& model, const std::vector<Eigen::VectorXd>& states,
                    const std::vector<Eigen::VectorXd>& inputs) {
  if (states.size() != inputs.size()) {
    throw std::invalid_argument("ensemble states/inputs size mismatch");
  }
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (states[i].size() != model.state_dim() || inputs[i].size() != model.n()) {
      throw std::invalid_argument("ensemble member " + std::to_string(i + 1) +
                                  " has wrong dimensions");
    }
  }
}

}  // namespace

std::vector<Eigen::VectorXd> direct_rhs_batch(const MultiMachineModel& model,
                                              const std::vector<Eigen::VectorXd>& states,
                                              const std::vector<Eigen::VectorXd>& inputs,
                                              bool parallel) {
  check_ensemble(model, states, inputs);
  const std::int64_t count = static_cast<std::int64_t>(states.size());
  std::vector<Eigen::VectorXd> out(states.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (parallel)
#endif
  for (std::int64_t i = 0; i < count; ++i) {
    out[static_cast<std::size_t>(i)] = model.direct_rhs(states[static_cast<std::size_t>(i)],
                                                        inputs[static_cast<std::size_t>(i)]);
  }
  (void)parallel;
  return out;
}

std::vector<Eigen::VectorXd> ph_rhs_batch(const MultiMachineModel& model, const PHStructure& ph,
                                          const std::vector<Eigen::VectorXd>& states,
                                          const std::vector<Eigen::VectorXd>& inputs,
                                          bool parallel) {
  check_ensemble(model, states, inputs);
  const std::int64_t count = static_cast<std::int64_t>(states.size());
  std::vector<Eigen::VectorXd> out(states.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (parallel)
#endif
  for (std::int64_t i = 0; i < count; ++i) {
    out[static_cast<std::size_t>(i)] = model.ph_rhs(ph, states[static_cast<std::size_t>(i)],
                                                    inputs[static_cast<std::size_t>(i)]);
  }
  (void)parallel;
  return out;
}

double max_rhs_mismatch(const MultiMachineModel& model, const PHStructure& ph,
                        const std::vector<Eigen::VectorXd>& states,
                        const std::vector<Eigen::VectorXd>& inputs, bool parallel) {
  const auto direct = direct_rhs_batch(model, states, inputs, parallel);
  const auto via_ph = ph_rhs_batch(model, ph, states, inputs, parallel);
  double worst = 0.0;
  for (std::size_t i = 0; i < direct.size(); ++i) {
    worst = std::max(worst, (direct[i] - via_ph[i]).cwiseAbs().maxCoeff());
  }
  return worst;
}

std::vector<BasinSample> basin_probe(const ScenarioConfig& cfg, const std::vector<double>& radii,
                                     int samples_per_radius, double omega_tol, bool parallel) {
  const ClosedLoopModel cl = make_closed_loop(cfg);
  const SteadyStateResult steady = find_steady_state_closed(cl, cfg.Pd, flat_start(cfg, cl));
  if (!steady.converged) {
    throw std::runtime_error("basin probe needs a solved steady state: " + steady.message);
  }

  std::vector<BasinSample> samples;
  for (std::size_t r = 0; r < radii.size(); ++r) {
    for (int s = 0; s < samples_per_radius; ++s) {
      BasinSample b;
      b.radius = radii[r];
      b.seed = cfg.initial.seed + 10007u * static_cast<unsigned>(r) + static_cast<unsigned>(s);
      samples.push_back(b);
    }
  }

  IntegratorConfig icfg = cfg.integrator;
  icfg.record_stride = std::numeric_limits<int>::max();  // endpoint only

  const std::int64_t count = static_cast<std::int64_t>(samples.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) if (parallel)
#endif
  for (std::int64_t i = 0; i < count; ++i) {
    BasinSample& b = samples[static_cast<std::size_t>(i)];
    std::mt19937_64 rng(b.seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    Eigen::VectorXd z0 = steady.state;
    for (Eigen::Index k = 0; k < z0.size(); ++k) z0[k] += b.radius * unit(rng);
    const IntegrationResult res = integrate(
        [&cl, &cfg](double, const Eigen::VectorXd& z, Eigen::VectorXd& dz) {
          dz = cl.rhs(z, cfg.Pd);
        },
        z0, icfg);
    b.integrated = res.ok();
    if (res.ok()) {
      b.final_omega_inf = cl.omega(res.traj.x.back()).cwiseAbs().maxCoeff();
      b.converged = b.final_omega_inf < omega_tol;
    }
  }
  (void)parallel;
  return samples;
}

bool openmp_enabled() {
#ifdef _OPENMP
  return true;
#else
  return false;
#endif
}

int openmp_max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace phgrid
