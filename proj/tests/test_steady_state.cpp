#include <cmath>
#include <random>

#include "doctest.h"
#include "test_support.hpp"

#include "phgrid/controller.hpp"
#include "phgrid/newton.hpp"
#include "phgrid/steady_state.hpp"

using namespace phgrid;

TEST_SUITE("steady_state") {

TEST_CASE("newton solves a linear system in one step") {
  Eigen::MatrixXd A(2, 2);
  A << 3.0, 1.0, -1.0, 2.0;
  Eigen::VectorXd b(2);
  b << 1.0, 4.0;
  const auto F = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return A * v - b; };
  const NewtonResult res = newton_solve(F, Eigen::VectorXd::Zero(2));
  REQUIRE(res.converged);
  CHECK(res.iterations <= 2);
  CHECK((A * res.v - b).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("newton reports zero iterations when the guess already solves the system") {
  const auto F = [](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    Eigen::VectorXd r(1);
    r << v[0] * v[0] - 4.0;
    return r;
  };
  Eigen::VectorXd v0(1);
  v0 << 2.0;
  const NewtonResult res = newton_solve(F, v0);
  REQUIRE(res.converged);
  CHECK(res.iterations == 0);
}

TEST_CASE("newton finds a root of a nonlinear system") {
  // x^2 + y^2 = 4, y = x: root at x = y = sqrt(2).
  const auto F = [](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    Eigen::VectorXd r(2);
    r << v[0] * v[0] + v[1] * v[1] - 4.0, v[1] - v[0];
    return r;
  };
  Eigen::VectorXd v0(2);
  v0 << 1.0, 1.5;
  const NewtonResult res = newton_solve(F, v0);
  REQUIRE(res.converged);
  CHECK(res.v[0] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-8));
  CHECK(res.v[1] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-8));
}

TEST_CASE("newton flags a singular Jacobian instead of crashing") {
  // Both residual rows are the same function: the Jacobian has rank one.
  const auto F = [](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    Eigen::VectorXd r(2);
    r << v[0] * v[1] - 1.0, v[0] * v[1] - 1.0;
    return r;
  };
  Eigen::VectorXd v0(2);
  v0 << 2.0, 3.0;
  const NewtonResult res = newton_solve(F, v0);
  CHECK_FALSE(res.converged);
  CHECK(res.singular_jacobian);
  CHECK(res.message.find("singular") != std::string::npos);
}

TEST_CASE("newton gives up gracefully on an unsolvable system") {
  // x^2 + 1 = 0 has no real root; expect a clean failure report.
  const auto F = [](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    Eigen::VectorXd r(1);
    r << v[0] * v[0] + 1.0;
    return r;
  };
  Eigen::VectorXd v0(1);
  v0 << 0.7;
  const NewtonResult res = newton_solve(F, v0);
  CHECK_FALSE(res.converged);
  CHECK(res.message.size() > 0);
}

TEST_CASE("constructed equilibria are fixed points of the open-loop solver") {
  std::mt19937_64 rng(71);
  for (int n : {2, 3, 5}) {
    const MultiMachineModel model = phtest::random_model(n, rng);
    Eigen::VectorXd delta(n);
    for (int i = 0; i < n; ++i) delta[i] = phtest::uniform(rng, -0.25, 0.25);
    Eigen::VectorXd u;
    const Eigen::VectorXd xbar = construct_open_loop_equilibrium(model, delta, u);

    // Exact equilibrium supplied as the guess: zero iterations.
    const SteadyStateResult at = find_steady_state_open(model, u, xbar);
    REQUIRE(at.converged);
    CHECK(at.iterations == 0);

    // Perturbed guess converges back to the same state.
    Eigen::VectorXd guess = xbar;
    for (Eigen::Index j = 0; j < guess.size(); ++j) guess[j] += phtest::uniform(rng, -0.02, 0.02);
    const SteadyStateResult back = find_steady_state_open(model, u, guess);
    REQUIRE(back.converged);
    CHECK(back.residual_inf < 1e-10);
    CHECK(model.direct_rhs(back.state, u).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((back.state - xbar).cwiseAbs().maxCoeff() < 1e-7);
  }
}

TEST_CASE("open-loop solver rejects unbalanced injections") {
  std::mt19937_64 rng(72);
  const MultiMachineModel model = phtest::random_model(2, rng);
  Eigen::VectorXd u(2);
  u << 0.5, 0.1;  // sums to 0.6: no equilibrium can exist
  const SteadyStateResult res =
      find_steady_state_open(model, u, Eigen::VectorXd::Zero(model.state_dim()));
  CHECK_FALSE(res.converged);
  CHECK(res.message.find("balance") != std::string::npos);
}

TEST_CASE("open-loop solver reports divergence on infeasible transfers without crashing") {
  MachineParams p = phtest::fixture_machine();
  Eigen::VectorXd xds = Eigen::VectorXd::Constant(2, p.Xd_s);
  const MultiMachineModel model(build_topology(2, {{0, 1, 1.5}}, xds), {p, p});
  Eigen::VectorXd u(2);
  u << 5.0, -5.0;  // far beyond what the line can carry
  const StateDims d = model.dims();
  Eigen::VectorXd guess = Eigen::VectorXd::Zero(d.size());
  for (int i = 0; i < 2; ++i) {
    guess[d.eq_t() + i] = p.Ef;
    guess[d.eq_s() + i] = p.Ef;
  }
  const SteadyStateResult res = find_steady_state_open(model, u, guess);
  CHECK_FALSE(res.converged);
  CHECK(res.message.size() > 0);
}

TEST_CASE("the open-loop Hessian is positive definite at small-angle equilibria") {
  std::mt19937_64 rng(73);
  const MultiMachineModel model = phtest::random_model(3, rng);
  Eigen::VectorXd delta(3);
  delta << 0.05, -0.1, 0.12;
  Eigen::VectorXd u;
  const Eigen::VectorXd xbar = construct_open_loop_equilibrium(model, delta, u);
  const SteadyStateResult res = find_steady_state_open(model, u, xbar);
  REQUIRE(res.converged);
  CHECK(res.hessian_pd);
  CHECK(res.hessian_min_eig > 0.0);
}

TEST_CASE("closed-loop steady state has zero frequency and optimal dispatch") {
  std::mt19937_64 rng(74);
  MachineParams p = phtest::fixture_machine();
  Eigen::VectorXd xds = Eigen::VectorXd::Constant(2, p.Xd_s);
  const MultiMachineModel plant(build_topology(2, {{0, 1, 0.8}}, xds), {p, p});
  Eigen::MatrixXd Q = Eigen::Vector2d(1.0, 2.0).asDiagonal();
  const ControllerConfig ctrl = make_controller_config(
      Q, Eigen::Vector2d(0.2, 0.3), Eigen::Vector2d(1.0, 1.5),
      build_comm_laplacian(2, {{0, 1, 1.0}}));
  const ClosedLoopModel cl(plant, ctrl);
  Eigen::VectorXd Pd(2);
  Pd << 0.25, 0.15;

  const StateDims d = plant.dims();
  Eigen::VectorXd z0 = Eigen::VectorXd::Zero(cl.state_dim());
  for (int i = 0; i < 2; ++i) {
    z0[d.eq_t() + i] = p.Ef;
    z0[d.eq_s() + i] = p.Ef;
  }
  const SteadyStateResult res = find_steady_state_closed(cl, Pd, z0);
  REQUIRE(res.converged);
  CHECK(res.residual_inf < 1e-10);

  const Eigen::VectorXd omega = cl.omega(res.state);
  CHECK(omega.cwiseAbs().maxCoeff() < 1e-11);
  const Eigen::VectorXd Pm =
      controller_output(ctrl, cl.vartheta_part(res.state), omega);
  const DispatchSolution sol = optimal_dispatch(Q, Pd);
  CHECK((Pm - sol.Pm_star).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(std::abs(Pm.sum() - Pd.sum()) < 1e-9);

  // The full closed-loop vector field vanishes there.
  CHECK(cl.rhs(res.state, Pd).cwiseAbs().maxCoeff() < 1e-9);

  // Supplying the solution as the guess finishes without iterating.
  const SteadyStateResult again = find_steady_state_closed(cl, Pd, res.state);
  REQUIRE(again.converged);
  CHECK(again.iterations == 0);
}

}  // TEST_SUITE
