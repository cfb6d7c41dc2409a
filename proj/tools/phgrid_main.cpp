#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "phgrid/scenario.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

bool load_or_report(const std::string& path, phgrid::ScenarioConfig& cfg) {
  phgrid::LoadResult lr = phgrid::load_config(path);
  if (!lr.ok()) {
    std::cerr << "config validation failed (" << lr.issues.size() << " issue"
              << (lr.issues.size() == 1 ? "" : "s") << "):\n";
    for (const std::string& s : lr.issues) std::cerr << "  - " << s << "\n";
    return false;
  }
  cfg = std::move(*lr.config);
  return true;
}

ordered_json structural_json(const phgrid::StructuralReport& rep) {
  ordered_json j;
  j["all_pass"] = rep.all_pass();
  j["grid_connected"] = rep.grid_connected;
  j["comm_connected"] = rep.comm_connected;
  j["q_positive_definite"] = rep.q_positive_definite;
  j["machines"] = ordered_json::array();
  for (const phgrid::MachineStructural& ms : rep.machines) {
    j["machines"].push_back({{"index", ms.index},
                             {"ordering_ok", ms.ordering_ok},
                             {"d_margin", ms.subtransient.d_margin},
                             {"q_margin", ms.subtransient.q_margin},
                             {"d_ok", ms.subtransient.d_ok},
                             {"q_ok", ms.subtransient.q_ok}});
  }
  j["failures"] = rep.failures;
  return j;
}

std::vector<double> to_std(const Eigen::VectorXd& v) {
  return {v.data(), v.data() + v.size()};
}

int cmd_validate(const std::string& path) {
  phgrid::ScenarioConfig cfg;
  if (!load_or_report(path, cfg)) return 1;
  const phgrid::StructuralReport rep = phgrid::structural_checks(cfg);
  std::cout << structural_json(rep).dump(2) << "\n";
  return rep.all_pass() ? 0 : 1;
}

int cmd_dispatch(const std::string& path) {
  phgrid::ScenarioConfig cfg;
  if (!load_or_report(path, cfg)) return 1;
  const phgrid::DispatchSolution sol = phgrid::optimal_dispatch(cfg.Q, cfg.Pd);
  ordered_json j;
  j["lambda_star"] = sol.lambda_star;
  j["Pm_star"] = to_std(sol.Pm_star);
  j["balance_residual"] = sol.Pm_star.sum() - cfg.Pd.sum();
  std::cout << j.dump(2) << "\n";
  return 0;
}

// Deterministic solver guess: flat start with any explicit state overrides
// applied on top (an exact equilibrium override converges in 0 iterations).
Eigen::VectorXd solver_guess(const phgrid::ScenarioConfig& cfg, const phgrid::ClosedLoopModel& cl) {
  phgrid::ScenarioConfig guess_cfg = cfg;
  guess_cfg.initial.mode = phgrid::InitialStateSpec::Mode::flat;
  phgrid::SteadyStateResult unused;
  return phgrid::initial_state(guess_cfg, cl, unused);
}

int cmd_steady_state(const std::string& path) {
  phgrid::ScenarioConfig cfg;
  if (!load_or_report(path, cfg)) return 1;
  const phgrid::StructuralReport rep = phgrid::structural_checks(cfg);
  if (!rep.all_pass()) {
    std::cerr << "structural validation failed:\n";
    for (const std::string& s : rep.failures) std::cerr << "  - " << s << "\n";
    return 1;
  }
  const phgrid::ClosedLoopModel cl = phgrid::make_closed_loop(cfg);
  const phgrid::SteadyStateResult res =
      phgrid::find_steady_state_closed(cl, cfg.Pd, solver_guess(cfg, cl));

  ordered_json j;
  j["converged"] = res.converged;
  j["residual_inf"] = res.residual_inf;
  j["iterations"] = res.iterations;
  if (!res.message.empty()) j["message"] = res.message;
  if (res.converged) {
    j["hessian_min_eig"] = res.hessian_min_eig;
    j["hessian_pd"] = res.hessian_pd;
    const phgrid::MultiMachineModel& plant = cl.plant();
    const phgrid::StateDims d = plant.dims();
    const Eigen::VectorXd x = res.state.head(plant.state_dim());
    j["state"] = {
        {"omega", to_std(cl.omega(res.state))},
        {"delta_rel", to_std(phgrid::delta_relative(plant.topology(), x.segment(d.eta(), d.m)))},
        {"Eq_t", to_std(x.segment(d.eq_t(), d.n))},
        {"Ed_t", to_std(x.segment(d.ed_t(), d.n))},
        {"Eq_s", to_std(x.segment(d.eq_s(), d.n))},
        {"Ed_s", to_std(x.segment(d.ed_s(), d.n))},
        {"vartheta", to_std(res.state.tail(d.n))},
        {"theta", to_std(cl.theta(res.state))},
    };
    const phgrid::SteadyStateReport ver = cl.verify_steady_state(res.state, cfg.Pd, 1e-5);
    ordered_json checks = ordered_json::array();
    for (const phgrid::SteadyStateCheck& c : ver.checks) {
      checks.push_back({{"name", c.name}, {"value", c.value}, {"tol", c.tol}, {"pass", c.pass}});
    }
    j["verification"] = {{"all_pass", ver.all_pass}, {"checks", std::move(checks)}};
  }
  std::cout << j.dump(2) << "\n";
  return res.converged ? 0 : 2;
}

int cmd_simulate(const std::string& path, const std::string& out_override,
                 const std::string& method_override, double dt_override, double t_end_override) {
  phgrid::ScenarioConfig cfg;
  if (!load_or_report(path, cfg)) return 1;
  if (!out_override.empty()) cfg.output_dir = out_override;
  if (!method_override.empty()) {
    cfg.integrator.method =
        method_override == "rk4" ? phgrid::IntegratorMethod::rk4 : phgrid::IntegratorMethod::rk45;
  }
  if (dt_override > 0.0) cfg.integrator.dt = dt_override;
  if (t_end_override > 0.0) cfg.integrator.t_end = t_end_override;

  const phgrid::ScenarioResult res = phgrid::run_scenario(cfg);

  std::error_code ec;
  fs::create_directories(cfg.output_dir, ec);
  if (ec) {
    std::cerr << "cannot create output directory " << cfg.output_dir << ": " << ec.message()
              << "\n";
    return 2;
  }
  const fs::path report_path = fs::path(cfg.output_dir) / "report.json";
  {
    std::ofstream rf(report_path);
    rf << phgrid::run_report(cfg, res).dump(2) << "\n";
  }
  if (res.integration.traj.samples() > 0) {
    const fs::path csv_path = fs::path(cfg.output_dir) / "trajectory.csv";
    std::ofstream cf(csv_path);
    phgrid::write_trajectory_csv(cf, cfg.n(), res);
    std::cout << "trajectory: " << csv_path.string() << "\n";
  }
  std::cout << "report: " << report_path.string() << "\n";
  if (!res.error.empty()) std::cerr << res.error << "\n";
  if (res.ok) {
    std::cout << "samples: " << res.integration.traj.samples()
              << ", endpoint all_pass: " << (res.endpoint.all_pass ? "true" : "false") << "\n";
  }
  return res.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"port-Hamiltonian multi-machine power network simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string method;
  double dt = -1.0;
  double t_end = -1.0;

  CLI::App* validate = app.add_subcommand("validate", "run the structural checks of a config");
  validate->add_option("config", config_path, "scenario config (JSON)")->required();

  CLI::App* dispatch = app.add_subcommand("dispatch", "print the cost-optimal dispatch");
  dispatch->add_option("config", config_path, "scenario config (JSON)")->required();

  CLI::App* steady =
      app.add_subcommand("steady-state", "solve for the closed-loop steady state");
  steady->add_option("config", config_path, "scenario config (JSON)")->required();

  CLI::App* simulate = app.add_subcommand("simulate", "integrate the closed loop and write CSV");
  simulate->add_option("config", config_path, "scenario config (JSON)")->required();
  simulate->add_option("--out", out_dir, "output directory (overrides config)");
  simulate->add_option("--method", method, "integrator: rk4 or rk45")
      ->check(CLI::IsMember({"rk4", "rk45"}));
  simulate->add_option("--dt", dt, "fixed step / initial step, seconds");
  simulate->add_option("--t-end", t_end, "simulated time horizon, seconds");

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate->parsed()) return cmd_validate(config_path);
    if (dispatch->parsed()) return cmd_dispatch(config_path);
    if (steady->parsed()) return cmd_steady_state(config_path);
    if (simulate->parsed()) return cmd_simulate(config_path, out_dir, method, dt, t_end);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
