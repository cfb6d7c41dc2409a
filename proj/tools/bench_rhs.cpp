#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <vector>

#include "phgrid/batch.hpp"

using phgrid::EdgeSpec;
using phgrid::MachineParams;
using phgrid::MultiMachineModel;

namespace {

MultiMachineModel ring_model(int n) {
  std::vector<MachineParams> machines;
  std::vector<EdgeSpec> edges;
  for (int i = 0; i < n; ++i) {
    MachineParams p;
    p.M = 0.03 + 0.002 * i;
    p.Xd = 1.8 + 0.01 * i;
    p.Xq = 1.7;
    p.Xd_t = 0.3;
    p.Xq_t = 0.55;
    p.Xd_s = 0.25;
    p.Xq_s = 0.25;
    p.Td0_t = 8.0;
    p.Tq0_t = 0.4;
    p.Td0_s = 0.03;
    p.Tq0_s = 0.05;
    p.Ef = 1.1;
    machines.push_back(p);
    if (n > 1 && (i + 1 < n || n > 2)) edges.push_back({i, (i + 1) % n, 0.5});
  }
  Eigen::VectorXd xds = Eigen::VectorXd::Constant(n, 0.25);
  return MultiMachineModel(phgrid::build_topology(n, edges, xds), machines);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
  const int n = argc > 1 ? std::atoi(argv[1]) : 10;
  const int ensemble = argc > 2 ? std::atoi(argv[2]) : 20000;
  const int reps = argc > 3 ? std::atoi(argv[3]) : 5;

  const MultiMachineModel model = ring_model(n);
  const phgrid::PHStructure ph = model.assemble_ph();

  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> angle(-0.6, 0.6), volt(0.8, 1.2), small(-0.2, 0.2);
  std::vector<Eigen::VectorXd> states, inputs;
  const phgrid::StateDims d = model.dims();
  for (int s = 0; s < ensemble; ++s) {
    Eigen::VectorXd delta(d.n);
    for (int i = 0; i < d.n; ++i) delta[i] = angle(rng);
    Eigen::VectorXd x(d.size());
    for (int i = 0; i < d.n; ++i) x[d.p() + i] = small(rng) * model.inertia()[i];
    x.segment(d.eta(), d.m) = model.topology().incidence.transpose() * delta;
    for (int i = 0; i < d.n; ++i) {
      x[d.eq_t() + i] = volt(rng);
      x[d.ed_t() + i] = small(rng);
      x[d.eq_s() + i] = volt(rng);
      x[d.ed_s() + i] = small(rng);
    }
    states.push_back(std::move(x));
    Eigen::VectorXd u(d.n);
    for (int i = 0; i < d.n; ++i) u[i] = small(rng);
    inputs.push_back(std::move(u));
  }

  std::printf("n=%d machines, ensemble=%d, reps=%d, OpenMP %s (%d threads)\n", n, ensemble, reps,
              phgrid::openmp_enabled() ? "on" : "off", phgrid::openmp_max_threads());
  std::printf("cross-check max|direct - pH| = %.3e\n",
              phgrid::max_rhs_mismatch(model, ph, states, inputs, false));

  struct Case {
    const char* name;
    bool use_ph;
    bool parallel;
  };
  const Case cases[] = {{"direct serial ", false, false},
                        {"direct omp    ", false, true},
                        {"pH     serial ", true, false},
                        {"pH     omp    ", true, true}};
  double baseline_direct = 0.0, baseline_ph = 0.0;
  for (const Case& c : cases) {
    double best = 1e300;
    for (int rep = 0; rep < reps; ++rep) {
      const auto t0 = std::chrono::steady_clock::now();
      if (c.use_ph) {
        phgrid::ph_rhs_batch(model, ph, states, inputs, c.parallel);
      } else {
        phgrid::direct_rhs_batch(model, states, inputs, c.parallel);
      }
      best = std::min(best, seconds_since(t0));
    }
    if (!c.parallel) (c.use_ph ? baseline_ph : baseline_direct) = best;
    const double base = c.use_ph ? baseline_ph : baseline_direct;
    std::printf("%s  %8.2f ms   %7.1f ns/eval   speedup vs serial %.2fx\n", c.name, best * 1e3,
                best / ensemble * 1e9, base / best);
  }
  return 0;
}
