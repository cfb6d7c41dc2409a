#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "phgrid/controller.hpp"
#include "phgrid/integrate.hpp"
#include "phgrid/machine.hpp"
#include "phgrid/model.hpp"
#include "phgrid/steady_state.hpp"

namespace phgrid {

/// How the initial state is chosen. The flat start uses omega = 0, a
/// DC-power-flow angle guess, E = Ef and vartheta = 0; "equilibrium" starts
/// exactly at the solved steady state; "perturbed" applies a seeded random
/// perturbation of the given scale around it. Explicit per-block overrides
/// are applied on top in every mode.
struct InitialStateSpec {
  enum class Mode { flat, equilibrium, perturbed };
  Mode mode = Mode::flat;
  double perturbation_scale = 0.0;
  unsigned seed = 1;
  std::optional<Eigen::VectorXd> omega, delta, Eq_t, Ed_t, Eq_s, Ed_s, vartheta;
};

struct ScenarioConfig {
  std::vector<MachineParams> machines;
  Eigen::VectorXd Pd;
  std::vector<EdgeSpec> lines;  // 0-based endpoints in memory, 1-based in JSON
  Eigen::MatrixXd Q;
  Eigen::VectorXd T, K;
  std::vector<WeightedEdge> comm_edges;
  IntegratorConfig integrator;
  InitialStateSpec initial;
  std::string output_dir = "out";

  int n() const { return static_cast<int>(machines.size()); }
};

/// Config plus every violation found; the config is present only when the
/// issue list is empty. Validation does not stop at the first problem and
/// every message names the machine/edge/field concerned.
struct LoadResult {
  std::optional<ScenarioConfig> config;
  std::vector<std::string> issues;
  bool ok() const { return issues.empty(); }
};

LoadResult load_config(const std::string& path);
LoadResult parse_config(const nlohmann::json& j);
nlohmann::ordered_json serialize_config(const ScenarioConfig& c);

struct MachineStructural {
  int index = 0;  // 1-based, as reported
  bool ordering_ok = false;
  SubtransientCheck subtransient;
};

struct StructuralReport {
  std::vector<MachineStructural> machines;
  bool grid_connected = false;
  bool comm_connected = false;
  bool q_positive_definite = false;
  std::vector<std::string> failures;
  bool all_pass() const { return failures.empty(); }
};

/// The gate conditions checked before any integration: reactance orderings,
/// the per-axis subtransient condition, connectivity of both graphs, Q > 0.
StructuralReport structural_checks(const ScenarioConfig& c);

/// Per-sample monitor series, rows conformal to the trajectory grid.
struct MonitorSeries {
  std::vector<double> H, H_shifted, dissipation, sum_Pe;
  Eigen::MatrixXd omega, delta_rel, Eq_t, Ed_t, Eq_s, Ed_s, Pm, Pe;
};

struct ScenarioResult {
  bool ok = false;
  int exit_code = 0;  // 0 success, 1 validation failure, 2 runtime failure
  std::string error;
  StructuralReport structural;
  DispatchSolution dispatch;
  SteadyStateResult steady;
  IntegrationResult integration;
  MonitorSeries monitors;
  SteadyStateReport endpoint;
  double max_abs_sum_Pe = 0.0;
  double max_shifted_uptick = 0.0;
};

/// Full pipeline: structural gate, closed-loop steady-state solve, initial
/// state, integration with monitors, endpoint verification.
ScenarioResult run_scenario(const ScenarioConfig& c);

MultiMachineModel make_model(const ScenarioConfig& c);
ClosedLoopModel make_closed_loop(const ScenarioConfig& c);

/// omega = 0, DC-power-flow angle guess against the dispatch injections,
/// E = Ef, vartheta = 0.
Eigen::VectorXd flat_start(const ScenarioConfig& c, const ClosedLoopModel& cl);

Eigen::VectorXd initial_state(const ScenarioConfig& c, const ClosedLoopModel& cl,
                              const SteadyStateResult& steady);

/// Columns: t, then per machine omega, delta_rel, Eq_t, Ed_t, Eq_s, Ed_s,
/// Pm, Pe, then H, H_shifted, sumPe. 17 significant digits.
void write_trajectory_csv(std::ostream& os, int n, const ScenarioResult& r);

nlohmann::ordered_json run_report(const ScenarioConfig& c, const ScenarioResult& r);

}  // namespace phgrid
