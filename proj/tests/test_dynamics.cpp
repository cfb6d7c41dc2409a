#include <cmath>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "test_support.hpp"

#include "phgrid/model.hpp"
#include "phgrid/steady_state.hpp"

using namespace phgrid;

namespace {

// Two machines, one line, coupling B = -0.5, convenient for hand values.
MultiMachineModel pair_model() {
  MachineParams p = phtest::fixture_machine();
  Eigen::VectorXd xds = Eigen::VectorXd::Constant(2, p.Xd_s);
  return MultiMachineModel(build_topology(2, {{0, 1, 1.5}}, xds), {p, p});
}

Eigen::VectorXd pair_state(double eta, double eq0, double eq1, double ed0, double ed1) {
  StateDims d{2, 1};
  Eigen::VectorXd x = Eigen::VectorXd::Zero(d.size());
  x[d.eta()] = eta;
  x[d.eq_s() + 0] = eq0;
  x[d.eq_s() + 1] = eq1;
  x[d.ed_s() + 0] = ed0;
  x[d.ed_s() + 1] = ed1;
  // Healthy transient voltages so gradients stay finite and realistic.
  x[d.eq_t() + 0] = x[d.eq_t() + 1] = 1.05;
  return x;
}

}  // namespace

TEST_SUITE("dynamics") {

TEST_CASE("construction rejects invalid machine parameters with the machine index") {
  MachineParams good = phtest::fixture_machine();
  MachineParams bad = good;
  bad.Xd_t = bad.Xd_s;  // breaks Xd_t > Xd_s
  Eigen::VectorXd xds(2);
  xds << good.Xd_s, bad.Xd_s;
  const NetworkTopology topo = build_topology(2, {{0, 1, 0.5}}, xds);
  CHECK_THROWS_AS(MultiMachineModel(topo, {good, bad}), std::invalid_argument);
  try {
    MultiMachineModel model(topo, {good, bad});
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("machine 2") != std::string::npos);
  }
}

TEST_CASE("construction rejects a topology built from other subtransient reactances") {
  MachineParams p = phtest::fixture_machine();
  Eigen::VectorXd wrong = Eigen::VectorXd::Constant(2, 0.18);
  const NetworkTopology topo = build_topology(2, {{0, 1, 0.5}}, wrong);
  CHECK_THROWS_AS(MultiMachineModel(topo, {p, p}), std::invalid_argument);
}

TEST_CASE("aligned equal voltages drive no current") {
  const MultiMachineModel model = pair_model();
  Eigen::VectorXd Id, Iq;
  model.dq_currents(pair_state(0.0, 1.0, 1.0, 0.0, 0.0), Id, Iq);
  CHECK(Id.cwiseAbs().maxCoeff() < 1e-15);
  CHECK(Iq.cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("quadrature pair reproduces the hand-computed currents and power") {
  const MultiMachineModel model = pair_model();
  const Eigen::VectorXd x = pair_state(M_PI / 2.0, 1.0, 1.0, 0.0, 0.0);
  Eigen::VectorXd Id, Iq;
  model.dq_currents(x, Id, Iq);
  CHECK(Id[0] == doctest::Approx(-0.5).epsilon(1e-13));
  CHECK(Id[1] == doctest::Approx(-0.5).epsilon(1e-13));
  CHECK(Iq[0] == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(Iq[1] == doctest::Approx(-0.5).epsilon(1e-13));
  const Eigen::VectorXd pe = model.electrical_power(x);
  CHECK(pe[0] == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(pe[1] == doctest::Approx(-0.5).epsilon(1e-13));
}

TEST_CASE("electrical power sums to zero over random states") {
  std::mt19937_64 rng(41);
  for (int n : {2, 3, 5, 10}) {
    const MultiMachineModel model = phtest::random_model(n, rng);
    for (int s = 0; s < 250; ++s) {
      const Eigen::VectorXd x = phtest::random_state(model, rng);
      CHECK(std::abs(model.electrical_power(x).sum()) < 1e-9);
    }
  }
}

TEST_CASE("terminal voltage with no current equals the internal voltage, and the hand value holds") {
  Eigen::VectorXd Eds(1), Eqs(1), Id(1), Iq(1), Xds(1), Vd, Vq;
  Eds << 0.0;
  Eqs << 1.0;
  Id << 0.0;
  Iq << 0.0;
  Xds << 0.25;
  terminal_voltage(Eds, Eqs, Id, Iq, Xds, Vd, Vq);
  CHECK(Vd[0] == doctest::Approx(0.0));
  CHECK(Vq[0] == doctest::Approx(1.0));
  Id << -0.5;
  Iq << 0.2;
  terminal_voltage(Eds, Eqs, Id, Iq, Xds, Vd, Vq);
  CHECK(Vq[0] == doctest::Approx(1.125).epsilon(1e-14));
  CHECK(Vd[0] == doctest::Approx(0.05).epsilon(1e-14));
}

TEST_CASE("an isolated machine relaxes its flux toward the excitation") {
  // A single machine has no neighbors, so both currents vanish and the
  // voltage equations decouple: Td0_t * dEq_t/dt = Ef - Eq_t.
  MachineParams p = phtest::fixture_machine();
  Eigen::VectorXd xds(1);
  xds << p.Xd_s;
  const MultiMachineModel model(build_topology(1, {}, xds), {p});
  const StateDims d = model.dims();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(d.size());
  x[d.eq_t()] = 0.9;
  x[d.ed_t()] = 0.1;
  x[d.eq_s()] = 0.8;
  x[d.ed_s()] = 0.05;
  const Eigen::VectorXd dx = model.direct_rhs(x, Eigen::VectorXd::Zero(1));
  CHECK(dx[d.eq_t()] == doctest::Approx((p.Ef - 0.9) / p.Td0_t).epsilon(1e-13));
  CHECK(dx[d.ed_t()] == doctest::Approx(-0.1 / p.Tq0_t).epsilon(1e-13));
  CHECK(dx[d.eq_s()] == doctest::Approx((0.9 - 0.8) / p.Td0_s).epsilon(1e-13));
  CHECK(dx[d.ed_s()] == doctest::Approx((0.1 - 0.05) / p.Tq0_s).epsilon(1e-13));
  CHECK(dx[d.p()] == doctest::Approx(0.0));
}

TEST_CASE("edge angle rate is the frequency difference across the edge") {
  std::mt19937_64 rng(42);
  const MultiMachineModel model = phtest::random_model(4, rng);
  const StateDims d = model.dims();
  const Eigen::VectorXd x = phtest::random_state(model, rng);
  const Eigen::VectorXd u = phtest::random_input(d.n, rng);
  const Eigen::VectorXd dx = model.direct_rhs(x, u);
  const Eigen::VectorXd omega = x.head(d.n).cwiseQuotient(model.inertia());
  const Eigen::VectorXd expected = model.topology().incidence.transpose() * omega;
  CHECK((dx.segment(d.eta(), d.m) - expected).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("momentum balance is input minus electrical power") {
  std::mt19937_64 rng(43);
  const MultiMachineModel model = phtest::random_model(5, rng);
  const StateDims d = model.dims();
  const Eigen::VectorXd x = phtest::random_state(model, rng);
  const Eigen::VectorXd u = phtest::random_input(d.n, rng);
  const Eigen::VectorXd dx = model.direct_rhs(x, u);
  const Eigen::VectorXd expected = u - model.electrical_power(x);
  CHECK((dx.head(d.n) - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("direct and port-Hamiltonian right-hand sides agree on random states") {
  std::mt19937_64 rng(44);
  double worst = 0.0;
  for (int n : {2, 3, 5, 10}) {
    for (int rep = 0; rep < 5; ++rep) {
      const MultiMachineModel model = phtest::random_model(n, rng);
      const PHStructure ph = model.assemble_ph();
      for (int s = 0; s < 50; ++s) {
        const Eigen::VectorXd x = phtest::random_state(model, rng);
        const Eigen::VectorXd u = phtest::random_input(n, rng);
        const double diff =
            (model.direct_rhs(x, u) - model.ph_rhs(ph, x, u)).cwiseAbs().maxCoeff();
        worst = std::max(worst, diff);
      }
    }
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("port output is the frequency vector") {
  std::mt19937_64 rng(45);
  const MultiMachineModel model = phtest::random_model(3, rng);
  const PHStructure ph = model.assemble_ph();
  const Eigen::VectorXd x = phtest::random_state(model, rng);
  const Eigen::VectorXd u = phtest::random_input(3, rng);
  Eigen::VectorXd y;
  model.ph_rhs(ph, x, u, &y);
  const Eigen::VectorXd omega = x.head(3).cwiseQuotient(model.inertia());
  CHECK((y - omega).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("interconnection is exactly skew and dissipation exactly symmetric") {
  std::mt19937_64 rng(46);
  for (int n : {2, 4, 8}) {
    const MultiMachineModel model = phtest::random_model(n, rng);
    const PHStructure ph = model.assemble_ph();
    CHECK((ph.J + ph.J.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((ph.R - ph.R.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((ph.A - (ph.J - ph.R)).cwiseAbs().maxCoeff() == 0.0);
    // The angle rows couple only to momenta, through the incidence matrix.
    const StateDims d = model.dims();
    CHECK((ph.A.block(d.p(), d.eta(), d.n, d.m) + model.topology().incidence)
              .cwiseAbs()
              .maxCoeff() == 0.0);
    CHECK((ph.A.block(d.eta(), d.p(), d.m, d.n) -
           model.topology().incidence.transpose())
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }
}

TEST_CASE("dissipation is PSD exactly when both axis conditions hold") {
  auto min_eig = [](const Eigen::MatrixXd& R) {
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(R, Eigen::EigenvaluesOnly)
        .eigenvalues()
        .minCoeff();
  };

  std::mt19937_64 rng(47);
  for (int trial = 0; trial < 10; ++trial) {
    const MultiMachineModel model = phtest::random_model(3, rng);
    for (const MachineParams& p : model.machines()) REQUIRE(check_subtransient_condition(p).ok());
    CHECK(min_eig(model.assemble_ph().R) > -1e-12);
  }

  // Slow subtransient d-axis breaks the condition and the matrix.
  MachineParams bad = phtest::fixture_machine();
  bad.Td0_s = 10.0;
  const SubtransientCheck chk = check_subtransient_condition(bad);
  CHECK(chk.d_margin < 0.0);
  CHECK_FALSE(chk.ok());
  Eigen::VectorXd xds = Eigen::VectorXd::Constant(2, bad.Xd_s);
  const MultiMachineModel broken(build_topology(2, {{0, 1, 0.5}}, xds), {bad, bad});
  CHECK(min_eig(broken.assemble_ph().R) < -1e-6);
}

TEST_CASE("subtransient margins match hand values and the boundary case fails") {
  const SubtransientCheck chk = check_subtransient_condition(phtest::fixture_machine());
  CHECK(chk.d_margin == doctest::Approx(1.555).epsilon(1e-13));
  CHECK(chk.q_margin == doctest::Approx(0.4225).epsilon(1e-13));
  CHECK(chk.ok());

  // Exact equality 4(Xd_t - Xd_s)Td0_t == (Xd - Xd_t)Td0_s is not strict.
  MachineParams edge = phtest::fixture_machine();
  edge.Td0_t = 1.5;
  edge.Td0_s = 0.2;  // 4*0.05*1.5 == 1.5*0.2
  const SubtransientCheck b = check_subtransient_condition(edge);
  CHECK(b.d_margin == doctest::Approx(0.0));
  CHECK_FALSE(b.d_ok);
}

TEST_CASE("quadratic dissipation rate is nonpositive and zero only at zero gradient") {
  std::mt19937_64 rng(48);
  const MultiMachineModel model = phtest::random_model(3, rng);
  const PHStructure ph = model.assemble_ph();
  CHECK(dissipation_rate(ph.R, Eigen::VectorXd::Zero(ph.dim())) == 0.0);
  for (int s = 0; s < 50; ++s) {
    Eigen::VectorXd g(ph.dim());
    for (Eigen::Index j = 0; j < g.size(); ++j) g[j] = phtest::uniform(rng, -1.0, 1.0);
    CHECK(dissipation_rate(ph.R, g) <= 1e-12);
  }
}

TEST_CASE("a constructed equilibrium annihilates the right-hand side") {
  std::mt19937_64 rng(49);
  for (int n : {2, 3, 5}) {
    const MultiMachineModel model = phtest::random_model(n, rng);
    Eigen::VectorXd delta(n);
    for (int i = 0; i < n; ++i) delta[i] = phtest::uniform(rng, -0.2, 0.2);
    Eigen::VectorXd u;
    const Eigen::VectorXd xbar = construct_open_loop_equilibrium(model, delta, u);
    CHECK(std::abs(u.sum()) < 1e-10);
    CHECK(model.direct_rhs(xbar, u).cwiseAbs().maxCoeff() < 1e-10);
    const PHStructure ph = model.assemble_ph();
    CHECK(model.ph_rhs(ph, xbar, u).cwiseAbs().maxCoeff() < 1e-9);
  }
}

}  // TEST_SUITE
