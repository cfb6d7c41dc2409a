#include "phgrid/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include <Eigen/Cholesky>

namespace phgrid {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

class Checker {
 public:
  explicit Checker(std::vector<std::string>& issues) : issues_(issues) {}

  void add(const std::string& msg) { issues_.push_back(msg); }

  bool object(const json& j, const std::string& ctx) {
    if (!j.is_object()) {
      add(ctx + ": expected an object");
      return false;
    }
    return true;
  }

  void known_keys(const json& j, const std::string& ctx, const std::set<std::string>& keys) {
    if (!j.is_object()) return;
    for (const auto& item : j.items()) {
      if (keys.find(item.key()) == keys.end()) add(ctx + "." + item.key() + ": unknown field");
    }
  }

  // Required finite number; returns fallback (and records an issue) when absent or mistyped.
  double number(const json& j, const std::string& ctx, const char* key, double fallback = 0.0) {
    if (!j.contains(key)) {
      add(ctx + "." + key + ": missing required number");
      return fallback;
    }
    if (!j[key].is_number()) {
      add(ctx + "." + key + ": expected a number");
      return fallback;
    }
    const double v = j[key].get<double>();
    if (!std::isfinite(v)) {
      add(ctx + "." + key + ": must be finite");
      return fallback;
    }
    return v;
  }

  double number_or(const json& j, const std::string& ctx, const char* key, double def) {
    if (!j.contains(key)) return def;
    return number(j, ctx, key);
  }

  long integer(const json& j, const std::string& ctx, const char* key, long fallback = 0) {
    if (!j.contains(key)) {
      add(ctx + "." + key + ": missing required integer");
      return fallback;
    }
    if (!j[key].is_number_integer()) {
      add(ctx + "." + key + ": expected an integer");
      return fallback;
    }
    return j[key].get<long>();
  }

  long integer_or(const json& j, const std::string& ctx, const char* key, long def) {
    if (!j.contains(key)) return def;
    return integer(j, ctx, key);
  }

  std::string string_or(const json& j, const std::string& ctx, const char* key,
                        const std::string& def) {
    if (!j.contains(key)) return def;
    if (!j[key].is_string()) {
      add(ctx + "." + key + ": expected a string");
      return def;
    }
    return j[key].get<std::string>();
  }

  // Vector of finite numbers with an exact length.
  bool vector(const json& j, const std::string& ctx, const char* key, Eigen::Index size,
              Eigen::VectorXd& out) {
    if (!j.contains(key)) {
      add(ctx + "." + key + ": missing required array");
      return false;
    }
    const json& a = j[key];
    if (!a.is_array() || a.size() != static_cast<std::size_t>(size)) {
      add(ctx + "." + key + ": expected an array of " + std::to_string(size) + " numbers");
      return false;
    }
    out.resize(size);
    for (Eigen::Index i = 0; i < size; ++i) {
      const json& e = a[static_cast<std::size_t>(i)];
      if (!e.is_number() || !std::isfinite(e.get<double>())) {
        add(ctx + "." + key + "[" + std::to_string(i + 1) + "]: expected a finite number");
        return false;
      }
      out[i] = e.get<double>();
    }
    return true;
  }

 private:
  std::vector<std::string>& issues_;
};

MachineParams parse_machine(Checker& ck, const json& j, const std::string& ctx, double& Pd) {
  MachineParams p;
  ck.known_keys(j, ctx,
                {"M", "Xd", "Xq", "Xd_t", "Xq_t", "Xd_s", "Xq_s", "Td0_t", "Tq0_t", "Td0_s",
                 "Tq0_s", "Ef", "Pd"});
  p.M = ck.number(j, ctx, "M");
  p.Xd = ck.number(j, ctx, "Xd");
  p.Xq = ck.number(j, ctx, "Xq");
  p.Xd_t = ck.number(j, ctx, "Xd_t");
  p.Xq_t = ck.number(j, ctx, "Xq_t");
  p.Xd_s = ck.number(j, ctx, "Xd_s");
  p.Xq_s = ck.number(j, ctx, "Xq_s");
  p.Td0_t = ck.number(j, ctx, "Td0_t");
  p.Tq0_t = ck.number(j, ctx, "Tq0_t");
  p.Td0_s = ck.number(j, ctx, "Td0_s");
  p.Tq0_s = ck.number(j, ctx, "Tq0_s");
  p.Ef = ck.number(j, ctx, "Ef");
  Pd = ck.number(j, ctx, "Pd");
  return p;
}

// Q is either a length-n array (diagonal) or an n x n matrix.
bool parse_cost_matrix(Checker& ck, const json& j, const std::string& ctx, int n,
                       Eigen::MatrixXd& Q) {
  if (!j.contains("Q")) {
    ck.add(ctx + ".Q: missing required array");
    return false;
  }
  const json& a = j["Q"];
  if (!a.is_array() || a.empty()) {
    ck.add(ctx + ".Q: expected a diagonal array or a square matrix");
    return false;
  }
  Q = Eigen::MatrixXd::Zero(n, n);
  if (a[0].is_array()) {
    if (a.size() != static_cast<std::size_t>(n)) {
      ck.add(ctx + ".Q: expected " + std::to_string(n) + " rows");
      return false;
    }
    for (int r = 0; r < n; ++r) {
      const json& row = a[static_cast<std::size_t>(r)];
      if (!row.is_array() || row.size() != static_cast<std::size_t>(n)) {
        ck.add(ctx + ".Q[" + std::to_string(r + 1) + "]: expected a row of " + std::to_string(n) +
               " numbers");
        return false;
      }
      for (int c = 0; c < n; ++c) {
        const json& e = row[static_cast<std::size_t>(c)];
        if (!e.is_number()) {
          ck.add(ctx + ".Q[" + std::to_string(r + 1) + "][" + std::to_string(c + 1) +
                 "]: expected a number");
          return false;
        }
        Q(r, c) = e.get<double>();
      }
    }
  } else {
    if (a.size() != static_cast<std::size_t>(n)) {
      ck.add(ctx + ".Q: expected " + std::to_string(n) + " diagonal entries");
      return false;
    }
    for (int i = 0; i < n; ++i) {
      const json& e = a[static_cast<std::size_t>(i)];
      if (!e.is_number()) {
        ck.add(ctx + ".Q[" + std::to_string(i + 1) + "]: expected a number");
        return false;
      }
      Q(i, i) = e.get<double>();
    }
  }
  if ((Q - Q.transpose()).cwiseAbs().maxCoeff() >
      1e-12 * std::max(1.0, Q.cwiseAbs().maxCoeff())) {
    ck.add(ctx + ".Q: must be symmetric");
    return false;
  }
  if (Eigen::LLT<Eigen::MatrixXd>(Q).info() != Eigen::Success) {
    ck.add(ctx + ".Q: must be positive definite");
    return false;
  }
  return true;
}

bool endpoint_in_range(Checker& ck, const std::string& ctx, long v, int n) {
  if (v < 1 || v > n) {
    ck.add(ctx + ": node index " + std::to_string(v) + " out of range 1.." + std::to_string(n));
    return false;
  }
  return true;
}

}  // namespace

LoadResult parse_config(const json& j) {
  LoadResult out;
  Checker ck(out.issues);
  if (!ck.object(j, "config")) return out;
  ck.known_keys(j, "config",
                {"machines", "lines", "controller", "integrator", "initial_state", "output"});

  ScenarioConfig cfg;

  if (!j.contains("machines") || !j["machines"].is_array() || j["machines"].empty()) {
    ck.add("config.machines: expected a non-empty array");
    return out;
  }
  const int n = static_cast<int>(j["machines"].size());
  cfg.Pd.resize(n);
  for (int i = 0; i < n; ++i) {
    const std::string ctx = "machines[" + std::to_string(i + 1) + "]";
    const json& mj = j["machines"][static_cast<std::size_t>(i)];
    if (!ck.object(mj, ctx)) continue;
    double Pd = 0.0;
    MachineParams p = parse_machine(ck, mj, ctx, Pd);
    cfg.Pd[i] = Pd;
    for (const std::string& msg : validate_machine(p)) ck.add(ctx + ": " + msg);
    cfg.machines.push_back(p);
  }
  if (static_cast<int>(cfg.machines.size()) != n) return out;

  if (!j.contains("lines") || !j["lines"].is_array()) {
    ck.add("config.lines: expected an array");
  } else {
    for (std::size_t l = 0; l < j["lines"].size(); ++l) {
      const std::string ctx = "lines[" + std::to_string(l + 1) + "]";
      const json& lj = j["lines"][l];
      if (!ck.object(lj, ctx)) continue;
      ck.known_keys(lj, ctx, {"from", "to", "X_T"});
      EdgeSpec e;
      const long from = ck.integer(lj, ctx, "from", 1);
      const long to = ck.integer(lj, ctx, "to", 1);
      e.reactance = ck.number(lj, ctx, "X_T");
      if (!endpoint_in_range(ck, ctx + ".from", from, n) ||
          !endpoint_in_range(ck, ctx + ".to", to, n)) {
        continue;
      }
      if (from == to) {
        ck.add(ctx + ": self-loop at node " + std::to_string(from));
        continue;
      }
      if (e.reactance < 0.0) ck.add(ctx + ".X_T: must be nonnegative");
      e.from = static_cast<int>(from - 1);
      e.to = static_cast<int>(to - 1);
      cfg.lines.push_back(e);
    }
    std::vector<std::pair<int, int>> ends;
    for (const EdgeSpec& e : cfg.lines) ends.emplace_back(e.from, e.to);
    if (!is_connected(n, ends)) ck.add("config.lines: electrical grid is not connected");
  }

  if (!j.contains("controller") || !j["controller"].is_object()) {
    ck.add("config.controller: expected an object");
  } else {
    const json& cj = j["controller"];
    const std::string ctx = "controller";
    ck.known_keys(cj, ctx, {"Q", "T", "K", "comm_edges"});
    parse_cost_matrix(ck, cj, ctx, n, cfg.Q);
    if (ck.vector(cj, ctx, "T", n, cfg.T) && !(cfg.T.minCoeff() > 0.0)) {
      ck.add(ctx + ".T: entries must be positive");
    }
    if (ck.vector(cj, ctx, "K", n, cfg.K) && !(cfg.K.minCoeff() > 0.0)) {
      ck.add(ctx + ".K: entries must be positive");
    }
    if (!cj.contains("comm_edges") || !cj["comm_edges"].is_array()) {
      ck.add(ctx + ".comm_edges: expected an array");
    } else {
      for (std::size_t l = 0; l < cj["comm_edges"].size(); ++l) {
        const std::string ectx = ctx + ".comm_edges[" + std::to_string(l + 1) + "]";
        const json& ej = cj["comm_edges"][l];
        if (!ck.object(ej, ectx)) continue;
        ck.known_keys(ej, ectx, {"from", "to", "weight"});
        WeightedEdge e;
        const long from = ck.integer(ej, ectx, "from", 1);
        const long to = ck.integer(ej, ectx, "to", 1);
        e.weight = ck.number_or(ej, ectx, "weight", 1.0);
        if (!endpoint_in_range(ck, ectx + ".from", from, n) ||
            !endpoint_in_range(ck, ectx + ".to", to, n)) {
          continue;
        }
        if (from == to) {
          ck.add(ectx + ": self-loop at node " + std::to_string(from));
          continue;
        }
        if (!(e.weight > 0.0)) ck.add(ectx + ".weight: must be positive");
        e.from = static_cast<int>(from - 1);
        e.to = static_cast<int>(to - 1);
        cfg.comm_edges.push_back(e);
      }
      std::vector<std::pair<int, int>> ends;
      for (const WeightedEdge& e : cfg.comm_edges) ends.emplace_back(e.from, e.to);
      if (!is_connected(n, ends)) ck.add(ctx + ".comm_edges: communication graph is not connected");
    }
  }

  if (j.contains("integrator")) {
    const json& ij = j["integrator"];
    const std::string ctx = "integrator";
    if (ck.object(ij, ctx)) {
      ck.known_keys(ij, ctx, {"method", "dt", "rtol", "atol", "t_end", "record_stride", "max_dt"});
      const std::string method = ck.string_or(ij, ctx, "method", "rk45");
      if (method == "rk4") {
        cfg.integrator.method = IntegratorMethod::rk4;
      } else if (method == "rk45") {
        cfg.integrator.method = IntegratorMethod::rk45;
      } else {
        ck.add(ctx + ".method: expected \"rk4\" or \"rk45\"");
      }
      cfg.integrator.dt = ck.number_or(ij, ctx, "dt", cfg.integrator.dt);
      cfg.integrator.rtol = ck.number_or(ij, ctx, "rtol", cfg.integrator.rtol);
      cfg.integrator.atol = ck.number_or(ij, ctx, "atol", cfg.integrator.atol);
      cfg.integrator.t_end = ck.number_or(ij, ctx, "t_end", cfg.integrator.t_end);
      cfg.integrator.record_stride =
          static_cast<int>(ck.integer_or(ij, ctx, "record_stride", cfg.integrator.record_stride));
      cfg.integrator.max_dt = ck.number_or(ij, ctx, "max_dt", cfg.integrator.max_dt);
      if (!(cfg.integrator.dt > 0.0)) ck.add(ctx + ".dt: must be positive");
      if (!(cfg.integrator.rtol > 0.0)) ck.add(ctx + ".rtol: must be positive");
      if (!(cfg.integrator.atol > 0.0)) ck.add(ctx + ".atol: must be positive");
      if (!(cfg.integrator.t_end > 0.0)) ck.add(ctx + ".t_end: must be positive");
      if (cfg.integrator.record_stride < 1) ck.add(ctx + ".record_stride: must be >= 1");
      if (!(cfg.integrator.max_dt > 0.0)) ck.add(ctx + ".max_dt: must be positive");
    }
  }

  if (j.contains("initial_state")) {
    const json& sj = j["initial_state"];
    const std::string ctx = "initial_state";
    if (ck.object(sj, ctx)) {
      ck.known_keys(sj, ctx,
                    {"mode", "perturbation_scale", "seed", "omega", "delta", "Eq_t", "Ed_t",
                     "Eq_s", "Ed_s", "vartheta"});
      const std::string mode = ck.string_or(sj, ctx, "mode", "flat");
      if (mode == "flat") {
        cfg.initial.mode = InitialStateSpec::Mode::flat;
      } else if (mode == "equilibrium") {
        cfg.initial.mode = InitialStateSpec::Mode::equilibrium;
      } else if (mode == "perturbed") {
        cfg.initial.mode = InitialStateSpec::Mode::perturbed;
      } else {
        ck.add(ctx + ".mode: expected \"flat\", \"equilibrium\", or \"perturbed\"");
      }
      cfg.initial.perturbation_scale = ck.number_or(sj, ctx, "perturbation_scale", 0.0);
      if (cfg.initial.perturbation_scale < 0.0) {
        ck.add(ctx + ".perturbation_scale: must be nonnegative");
      }
      const long seed = ck.integer_or(sj, ctx, "seed", 1);
      if (seed < 0) ck.add(ctx + ".seed: must be nonnegative");
      cfg.initial.seed = static_cast<unsigned>(seed);
      Eigen::VectorXd v;
      if (sj.contains("omega") && ck.vector(sj, ctx, "omega", n, v)) cfg.initial.omega = v;
      if (sj.contains("delta") && ck.vector(sj, ctx, "delta", n, v)) cfg.initial.delta = v;
      if (sj.contains("Eq_t") && ck.vector(sj, ctx, "Eq_t", n, v)) cfg.initial.Eq_t = v;
      if (sj.contains("Ed_t") && ck.vector(sj, ctx, "Ed_t", n, v)) cfg.initial.Ed_t = v;
      if (sj.contains("Eq_s") && ck.vector(sj, ctx, "Eq_s", n, v)) cfg.initial.Eq_s = v;
      if (sj.contains("Ed_s") && ck.vector(sj, ctx, "Ed_s", n, v)) cfg.initial.Ed_s = v;
      if (sj.contains("vartheta") && ck.vector(sj, ctx, "vartheta", n, v)) cfg.initial.vartheta = v;
    }
  }

  if (j.contains("output")) {
    const json& oj = j["output"];
    if (ck.object(oj, "output")) {
      ck.known_keys(oj, "output", {"dir"});
      cfg.output_dir = ck.string_or(oj, "output", "dir", cfg.output_dir);
    }
  }

  if (out.issues.empty()) out.config = std::move(cfg);
  return out;
}

LoadResult load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) {
    LoadResult out;
    out.issues.push_back("cannot open config file: " + path);
    return out;
  }
  std::stringstream buf;
  buf << f.rdbuf();
  json j;
  try {
    j = json::parse(buf.str());
  } catch (const json::parse_error& e) {
    LoadResult out;
    out.issues.push_back(std::string("config parse error: ") + e.what());
    return out;
  }
  return parse_config(j);
}

nlohmann::ordered_json serialize_config(const ScenarioConfig& c) {
  ordered_json j;
  j["machines"] = ordered_json::array();
  for (int i = 0; i < c.n(); ++i) {
    const MachineParams& p = c.machines[static_cast<std::size_t>(i)];
    ordered_json mj;
    mj["M"] = p.M;
    mj["Xd"] = p.Xd;
    mj["Xq"] = p.Xq;
    mj["Xd_t"] = p.Xd_t;
    mj["Xq_t"] = p.Xq_t;
    mj["Xd_s"] = p.Xd_s;
    mj["Xq_s"] = p.Xq_s;
    mj["Td0_t"] = p.Td0_t;
    mj["Tq0_t"] = p.Tq0_t;
    mj["Td0_s"] = p.Td0_s;
    mj["Tq0_s"] = p.Tq0_s;
    mj["Ef"] = p.Ef;
    mj["Pd"] = c.Pd[i];
    j["machines"].push_back(std::move(mj));
  }
  j["lines"] = ordered_json::array();
  for (const EdgeSpec& e : c.lines) {
    j["lines"].push_back({{"from", e.from + 1}, {"to", e.to + 1}, {"X_T", e.reactance}});
  }
  ordered_json cj;
  cj["Q"] = ordered_json::array();
  for (Eigen::Index r = 0; r < c.Q.rows(); ++r) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index col = 0; col < c.Q.cols(); ++col) row.push_back(c.Q(r, col));
    cj["Q"].push_back(std::move(row));
  }
  cj["T"] = std::vector<double>(c.T.data(), c.T.data() + c.T.size());
  cj["K"] = std::vector<double>(c.K.data(), c.K.data() + c.K.size());
  cj["comm_edges"] = ordered_json::array();
  for (const WeightedEdge& e : c.comm_edges) {
    cj["comm_edges"].push_back({{"from", e.from + 1}, {"to", e.to + 1}, {"weight", e.weight}});
  }
  j["controller"] = std::move(cj);

  ordered_json ij;
  ij["method"] = c.integrator.method == IntegratorMethod::rk4 ? "rk4" : "rk45";
  ij["dt"] = c.integrator.dt;
  ij["rtol"] = c.integrator.rtol;
  ij["atol"] = c.integrator.atol;
  ij["t_end"] = c.integrator.t_end;
  ij["record_stride"] = c.integrator.record_stride;
  ij["max_dt"] = c.integrator.max_dt;
  j["integrator"] = std::move(ij);

  ordered_json sj;
  switch (c.initial.mode) {
    case InitialStateSpec::Mode::flat:
      sj["mode"] = "flat";
      break;
    case InitialStateSpec::Mode::equilibrium:
      sj["mode"] = "equilibrium";
      break;
    case InitialStateSpec::Mode::perturbed:
      sj["mode"] = "perturbed";
      break;
  }
  sj["perturbation_scale"] = c.initial.perturbation_scale;
  sj["seed"] = c.initial.seed;
  auto put = [&sj](const char* key, const std::optional<Eigen::VectorXd>& v) {
    if (v) sj[key] = std::vector<double>(v->data(), v->data() + v->size());
  };
  put("omega", c.initial.omega);
  put("delta", c.initial.delta);
  put("Eq_t", c.initial.Eq_t);
  put("Ed_t", c.initial.Ed_t);
  put("Eq_s", c.initial.Eq_s);
  put("Ed_s", c.initial.Ed_s);
  put("vartheta", c.initial.vartheta);
  j["initial_state"] = std::move(sj);

  j["output"] = {{"dir", c.output_dir}};
  return j;
}

StructuralReport structural_checks(const ScenarioConfig& c) {
  StructuralReport rep;
  for (int i = 0; i < c.n(); ++i) {
    const MachineParams& p = c.machines[static_cast<std::size_t>(i)];
    MachineStructural ms;
    ms.index = i + 1;
    const auto issues = validate_machine(p);
    ms.ordering_ok = issues.empty();
    for (const std::string& msg : issues) {
      rep.failures.push_back("machine " + std::to_string(i + 1) + ": " + msg);
    }
    ms.subtransient = check_subtransient_condition(p);
    if (!ms.subtransient.d_ok) {
      rep.failures.push_back("machine " + std::to_string(i + 1) +
                             ": d-axis subtransient condition violated (margin = " +
                             fmt6(ms.subtransient.d_margin) + ")");
    }
    if (!ms.subtransient.q_ok) {
      rep.failures.push_back("machine " + std::to_string(i + 1) +
                             ": q-axis subtransient condition violated (margin = " +
                             fmt6(ms.subtransient.q_margin) + ")");
    }
    rep.machines.push_back(ms);
  }

  std::vector<std::pair<int, int>> grid_ends, comm_ends;
  for (const EdgeSpec& e : c.lines) grid_ends.emplace_back(e.from, e.to);
  for (const WeightedEdge& e : c.comm_edges) comm_ends.emplace_back(e.from, e.to);
  rep.grid_connected = is_connected(c.n(), grid_ends);
  if (!rep.grid_connected) rep.failures.push_back("electrical grid is not connected");
  rep.comm_connected = is_connected(c.n(), comm_ends);
  if (!rep.comm_connected) rep.failures.push_back("communication graph is not connected");

  const bool symmetric = (c.Q - c.Q.transpose()).cwiseAbs().maxCoeff() <=
                         1e-12 * std::max(1.0, c.Q.cwiseAbs().maxCoeff());
  rep.q_positive_definite =
      symmetric && Eigen::LLT<Eigen::MatrixXd>(c.Q).info() == Eigen::Success;
  if (!rep.q_positive_definite) {
    rep.failures.push_back("cost matrix Q is not symmetric positive definite");
  }
  return rep;
}

MultiMachineModel make_model(const ScenarioConfig& c) {
  Eigen::VectorXd xds(c.n());
  for (int i = 0; i < c.n(); ++i) xds[i] = c.machines[static_cast<std::size_t>(i)].Xd_s;
  return MultiMachineModel(build_topology(c.n(), c.lines, xds), c.machines);
}

ClosedLoopModel make_closed_loop(const ScenarioConfig& c) {
  return ClosedLoopModel(make_model(c),
                         make_controller_config(c.Q, c.T, c.K,
                                                build_comm_laplacian(c.n(), c.comm_edges)));
}

Eigen::VectorXd flat_start(const ScenarioConfig& c, const ClosedLoopModel& cl) {
  const MultiMachineModel& plant = cl.plant();
  const StateDims d = plant.dims();
  Eigen::VectorXd z = Eigen::VectorXd::Zero(cl.state_dim());

  // DC power flow: L delta = P_m* - P_d with L the 1/X_l weighted Laplacian,
  // anchored at machine 1.
  const DispatchSolution sol = optimal_dispatch(c.Q, c.Pd);
  const Eigen::VectorXd inj = sol.Pm_star - c.Pd;
  const Eigen::MatrixXd& D = plant.topology().incidence;
  const Eigen::MatrixXd L =
      D * (-plant.topology().edge_susceptance).asDiagonal() * D.transpose();
  Eigen::VectorXd delta = Eigen::VectorXd::Zero(d.n);
  if (d.n > 1) {
    delta.tail(d.n - 1) = L.bottomRightCorner(d.n - 1, d.n - 1)
                              .ldlt()
                              .solve(inj.tail(d.n - 1));
  }
  z.segment(d.eta(), d.m) = D.transpose() * delta;
  z.segment(d.eq_t(), d.n) = plant.excitation();
  z.segment(d.eq_s(), d.n) = plant.excitation();
  return z;
}

Eigen::VectorXd initial_state(const ScenarioConfig& c, const ClosedLoopModel& cl,
                              const SteadyStateResult& steady) {
  const MultiMachineModel& plant = cl.plant();
  const StateDims d = plant.dims();
  Eigen::VectorXd z;
  switch (c.initial.mode) {
    case InitialStateSpec::Mode::flat:
      z = flat_start(c, cl);
      break;
    case InitialStateSpec::Mode::equilibrium:
      z = steady.state;
      break;
    case InitialStateSpec::Mode::perturbed: {
      z = steady.state;
      std::mt19937_64 rng(c.initial.seed);
      std::uniform_real_distribution<double> unit(-1.0, 1.0);
      for (Eigen::Index i = 0; i < z.size(); ++i) {
        z[i] += c.initial.perturbation_scale * unit(rng);
      }
      break;
    }
  }
  if (c.initial.omega) {
    z.segment(d.p(), d.n) = plant.inertia().array() * c.initial.omega->array();
  }
  if (c.initial.delta) {
    z.segment(d.eta(), d.m) = plant.topology().incidence.transpose() * (*c.initial.delta);
  }
  if (c.initial.Eq_t) z.segment(d.eq_t(), d.n) = *c.initial.Eq_t;
  if (c.initial.Ed_t) z.segment(d.ed_t(), d.n) = *c.initial.Ed_t;
  if (c.initial.Eq_s) z.segment(d.eq_s(), d.n) = *c.initial.Eq_s;
  if (c.initial.Ed_s) z.segment(d.ed_s(), d.n) = *c.initial.Ed_s;
  if (c.initial.vartheta) z.tail(d.n) = *c.initial.vartheta;
  return z;
}

namespace {

void fill_monitors(const ClosedLoopModel& cl, const Eigen::VectorXd& zbar, ScenarioResult& r) {
  const MultiMachineModel& plant = cl.plant();
  const StateDims d = plant.dims();
  const int S = r.integration.traj.samples();
  MonitorSeries& mo = r.monitors;
  mo.H.resize(static_cast<std::size_t>(S));
  mo.H_shifted.resize(static_cast<std::size_t>(S));
  mo.dissipation.resize(static_cast<std::size_t>(S));
  mo.sum_Pe.resize(static_cast<std::size_t>(S));
  mo.omega.resize(S, d.n);
  mo.delta_rel.resize(S, d.n);
  mo.Eq_t.resize(S, d.n);
  mo.Ed_t.resize(S, d.n);
  mo.Eq_s.resize(S, d.n);
  mo.Ed_s.resize(S, d.n);
  mo.Pm.resize(S, d.n);
  mo.Pe.resize(S, d.n);

  r.max_abs_sum_Pe = 0.0;
  r.max_shifted_uptick = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < S; ++k) {
    const Eigen::VectorXd& z = r.integration.traj.x[static_cast<std::size_t>(k)];
    const Eigen::VectorXd x = cl.plant_part(z);
    const Eigen::VectorXd w = cl.omega(z);
    const Eigen::VectorXd Pe = plant.electrical_power(x);
    mo.omega.row(k) = w.transpose();
    mo.delta_rel.row(k) =
        delta_relative(plant.topology(), x.segment(d.eta(), d.m)).transpose();
    mo.Eq_t.row(k) = x.segment(d.eq_t(), d.n).transpose();
    mo.Ed_t.row(k) = x.segment(d.ed_t(), d.n).transpose();
    mo.Eq_s.row(k) = x.segment(d.eq_s(), d.n).transpose();
    mo.Ed_s.row(k) = x.segment(d.ed_s(), d.n).transpose();
    mo.Pm.row(k) = controller_output(cl.controller(), cl.vartheta_part(z), w).transpose();
    mo.Pe.row(k) = Pe.transpose();
    mo.H[static_cast<std::size_t>(k)] = cl.hamiltonian(z);
    mo.H_shifted[static_cast<std::size_t>(k)] = cl.shifted_hamiltonian(z, zbar);
    mo.dissipation[static_cast<std::size_t>(k)] = cl.dissipation_rate(z, zbar);
    mo.sum_Pe[static_cast<std::size_t>(k)] = Pe.sum();
    r.max_abs_sum_Pe = std::max(r.max_abs_sum_Pe, std::abs(Pe.sum()));
    if (k > 0) {
      r.max_shifted_uptick =
          std::max(r.max_shifted_uptick, mo.H_shifted[static_cast<std::size_t>(k)] -
                                             mo.H_shifted[static_cast<std::size_t>(k - 1)]);
    }
  }
  if (S < 2) r.max_shifted_uptick = 0.0;
}

}  // namespace

ScenarioResult run_scenario(const ScenarioConfig& c) {
  ScenarioResult r;
  r.structural = structural_checks(c);
  if (!r.structural.all_pass()) {
    r.exit_code = 1;
    r.error = "structural validation failed: " + r.structural.failures.front();
    return r;
  }

  const ClosedLoopModel cl = make_closed_loop(c);
  r.dispatch = optimal_dispatch(c.Q, c.Pd);

  r.steady = find_steady_state_closed(cl, c.Pd, flat_start(c, cl));
  if (!r.steady.converged) {
    r.exit_code = 2;
    r.error = "steady-state solve failed: " + r.steady.message;
    return r;
  }

  const Eigen::VectorXd z0 = initial_state(c, cl, r.steady);
  r.integration = integrate(
      [&cl, &c](double, const Eigen::VectorXd& z, Eigen::VectorXd& dz) { dz = cl.rhs(z, c.Pd); },
      z0, c.integrator);

  fill_monitors(cl, r.steady.state, r);
  r.endpoint = cl.verify_steady_state(r.integration.traj.x.back(), c.Pd, 1e-5);

  if (!r.integration.ok()) {
    r.exit_code = 2;
    r.error = std::string("integration failed: ") + to_string(r.integration.status) + " at t = " +
              fmt6(r.integration.failure_time);
    return r;
  }
  r.ok = true;
  return r;
}

void write_trajectory_csv(std::ostream& os, int n, const ScenarioResult& r) {
  os << "t";
  for (int i = 1; i <= n; ++i) {
    os << ",omega_" << i << ",delta_rel_" << i << ",Eq_t_" << i << ",Ed_t_" << i << ",Eq_s_" << i
       << ",Ed_s_" << i << ",Pm_" << i << ",Pe_" << i;
  }
  os << ",H,H_shifted,sumPe\n";
  const MonitorSeries& mo = r.monitors;
  for (int k = 0; k < r.integration.traj.samples(); ++k) {
    os << fmt17(r.integration.traj.t[static_cast<std::size_t>(k)]);
    for (int i = 0; i < n; ++i) {
      os << ',' << fmt17(mo.omega(k, i)) << ',' << fmt17(mo.delta_rel(k, i)) << ','
         << fmt17(mo.Eq_t(k, i)) << ',' << fmt17(mo.Ed_t(k, i)) << ',' << fmt17(mo.Eq_s(k, i))
         << ',' << fmt17(mo.Ed_s(k, i)) << ',' << fmt17(mo.Pm(k, i)) << ','
         << fmt17(mo.Pe(k, i));
    }
    os << ',' << fmt17(mo.H[static_cast<std::size_t>(k)]) << ','
       << fmt17(mo.H_shifted[static_cast<std::size_t>(k)]) << ','
       << fmt17(mo.sum_Pe[static_cast<std::size_t>(k)]) << '\n';
  }
}

nlohmann::ordered_json run_report(const ScenarioConfig& c, const ScenarioResult& r) {
  ordered_json j;
  j["ok"] = r.ok;
  j["exit_code"] = r.exit_code;
  if (!r.error.empty()) j["error"] = r.error;
  j["scenario"] = {{"machines", c.n()},
                   {"lines", static_cast<int>(c.lines.size())},
                   {"method", c.integrator.method == IntegratorMethod::rk4 ? "rk4" : "rk45"},
                   {"t_end", c.integrator.t_end}};

  ordered_json st;
  st["all_pass"] = r.structural.all_pass();
  st["grid_connected"] = r.structural.grid_connected;
  st["comm_connected"] = r.structural.comm_connected;
  st["q_positive_definite"] = r.structural.q_positive_definite;
  st["machines"] = ordered_json::array();
  for (const MachineStructural& ms : r.structural.machines) {
    st["machines"].push_back({{"index", ms.index},
                              {"ordering_ok", ms.ordering_ok},
                              {"d_margin", ms.subtransient.d_margin},
                              {"q_margin", ms.subtransient.q_margin},
                              {"d_ok", ms.subtransient.d_ok},
                              {"q_ok", ms.subtransient.q_ok}});
  }
  st["failures"] = r.structural.failures;
  j["structural"] = std::move(st);

  if (r.dispatch.Pm_star.size() > 0) {
    j["dispatch"] = {{"lambda_star", r.dispatch.lambda_star},
                     {"Pm_star", std::vector<double>(r.dispatch.Pm_star.data(),
                                                     r.dispatch.Pm_star.data() +
                                                         r.dispatch.Pm_star.size())}};
  }

  ordered_json ss;
  ss["converged"] = r.steady.converged;
  ss["residual_inf"] = r.steady.residual_inf;
  ss["iterations"] = r.steady.iterations;
  ss["hessian_min_eig"] = r.steady.hessian_min_eig;
  ss["hessian_pd"] = r.steady.hessian_pd;
  if (!r.steady.message.empty()) ss["message"] = r.steady.message;
  j["steady_state"] = std::move(ss);

  ordered_json in;
  in["status"] = to_string(r.integration.status);
  in["steps_accepted"] = r.integration.steps_accepted;
  in["steps_rejected"] = r.integration.steps_rejected;
  in["rhs_evaluations"] = r.integration.rhs_evaluations;
  in["samples"] = r.integration.traj.samples();
  if (!r.integration.ok()) in["failure_time"] = r.integration.failure_time;
  if (!r.integration.traj.t.empty()) in["t_final"] = r.integration.traj.t.back();
  j["integration"] = std::move(in);

  ordered_json mon;
  mon["max_abs_sum_Pe"] = r.max_abs_sum_Pe;
  mon["max_shifted_uptick"] = r.max_shifted_uptick;
  if (!r.monitors.H_shifted.empty()) {
    mon["final_H_shifted"] = r.monitors.H_shifted.back();
    mon["final_omega_inf"] = r.monitors.omega.bottomRows(1).cwiseAbs().maxCoeff();
  }
  j["monitors"] = std::move(mon);

  ordered_json ep;
  ep["all_pass"] = r.endpoint.all_pass;
  ep["lambda_star"] = r.endpoint.lambda_star;
  ep["checks"] = ordered_json::array();
  for (const SteadyStateCheck& ck : r.endpoint.checks) {
    ep["checks"].push_back(
        {{"name", ck.name}, {"value", ck.value}, {"tol", ck.tol}, {"pass", ck.pass}});
  }
  j["endpoint"] = std::move(ep);
  return j;
}

}  // namespace phgrid
