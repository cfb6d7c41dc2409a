#include <random>
#include <vector>

#include "doctest.h"
#include "test_support.hpp"

#include "phgrid/batch.hpp"
#include "phgrid/scenario.hpp"

using namespace phgrid;

TEST_SUITE("batch") {

TEST_CASE("parallel and serial ensemble evaluations are bit-identical") {
  std::mt19937_64 rng(81);
  const MultiMachineModel model = phtest::random_model(5, rng);
  const PHStructure ph = model.assemble_ph();
  std::vector<Eigen::VectorXd> states, inputs;
  for (int s = 0; s < 200; ++s) {
    states.push_back(phtest::random_state(model, rng));
    inputs.push_back(phtest::random_input(5, rng));
  }
  const auto serial_direct = direct_rhs_batch(model, states, inputs, false);
  const auto parallel_direct = direct_rhs_batch(model, states, inputs, true);
  const auto serial_ph = ph_rhs_batch(model, ph, states, inputs, false);
  const auto parallel_ph = ph_rhs_batch(model, ph, states, inputs, true);
  REQUIRE(serial_direct.size() == states.size());
  for (std::size_t k = 0; k < states.size(); ++k) {
    CHECK((serial_direct[k] - parallel_direct[k]).cwiseAbs().maxCoeff() == 0.0);
    CHECK((serial_ph[k] - parallel_ph[k]).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("the two evaluation routes stay within tolerance over an ensemble") {
  std::mt19937_64 rng(82);
  const MultiMachineModel model = phtest::random_model(4, rng);
  const PHStructure ph = model.assemble_ph();
  std::vector<Eigen::VectorXd> states, inputs;
  for (int s = 0; s < 500; ++s) {
    states.push_back(phtest::random_state(model, rng));
    inputs.push_back(phtest::random_input(4, rng));
  }
  CHECK(max_rhs_mismatch(model, ph, states, inputs, true) < 1e-9);
  CHECK(max_rhs_mismatch(model, ph, states, inputs, false) < 1e-9);
}

TEST_CASE("mismatched ensemble sizes are rejected") {
  std::mt19937_64 rng(83);
  const MultiMachineModel model = phtest::random_model(2, rng);
  const PHStructure ph = model.assemble_ph();
  std::vector<Eigen::VectorXd> states{phtest::random_state(model, rng)};
  std::vector<Eigen::VectorXd> inputs;
  CHECK_THROWS_AS(direct_rhs_batch(model, states, inputs, false), std::invalid_argument);
  CHECK_THROWS_AS(ph_rhs_batch(model, ph, states, inputs, false), std::invalid_argument);
}

TEST_CASE("basin probe returns converged samples at tiny radii, independent of threading") {
  nlohmann::json j = nlohmann::json::parse(R"({
    "machines": [
      {"M": 0.04, "Xd": 1.8, "Xq": 1.7, "Xd_t": 0.3, "Xq_t": 0.55, "Xd_s": 0.25, "Xq_s": 0.25,
       "Td0_t": 8.0, "Tq0_t": 0.4, "Td0_s": 0.03, "Tq0_s": 0.05, "Ef": 1.1, "Pd": 0.2},
      {"M": 0.03, "Xd": 1.7, "Xq": 1.6, "Xd_t": 0.28, "Xq_t": 0.5, "Xd_s": 0.22, "Xq_s": 0.22,
       "Td0_t": 7.0, "Tq0_t": 0.5, "Td0_s": 0.03, "Tq0_s": 0.05, "Ef": 1.05, "Pd": 0.1}
    ],
    "lines": [{"from": 1, "to": 2, "X_T": 0.5}],
    "controller": {
      "Q": [1.0, 2.0],
      "T": [0.2, 0.3],
      "K": [1.2, 1.0],
      "comm_edges": [{"from": 1, "to": 2, "weight": 1.0}]
    },
    "integrator": {"method": "rk45", "t_end": 30.0},
    "initial_state": {"mode": "perturbed", "seed": 3}
  })");
  const LoadResult res = parse_config(j);
  REQUIRE(res.ok());
  const std::vector<double> radii{0.0, 0.02};
  const auto serial = basin_probe(*res.config, radii, 3, 1e-4, false);
  const auto parallel = basin_probe(*res.config, radii, 3, 1e-4, true);
  REQUIRE(serial.size() == 6);
  REQUIRE(parallel.size() == 6);
  for (std::size_t k = 0; k < serial.size(); ++k) {
    CHECK(serial[k].radius == parallel[k].radius);
    CHECK(serial[k].seed == parallel[k].seed);
    CHECK(serial[k].integrated == parallel[k].integrated);
    CHECK(serial[k].converged == parallel[k].converged);
    CHECK(serial[k].final_omega_inf == parallel[k].final_omega_inf);
  }
  // Zero-radius samples start at the steady state and stay regulated.
  for (std::size_t k = 0; k < serial.size(); ++k) {
    if (serial[k].radius == 0.0) {
      CHECK(serial[k].integrated);
      CHECK(serial[k].converged);
    }
  }
}

TEST_CASE("threading report is internally consistent") {
  if (openmp_enabled()) {
    CHECK(openmp_max_threads() >= 1);
  } else {
    CHECK(openmp_max_threads() == 1);
  }
}

}  // TEST_SUITE
