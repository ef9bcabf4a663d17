#include <catch_amalgamated.hpp>
#include <cmath>

#include "oracles.hpp"
#include "qpl/errors.hpp"
#include "qpl/predictor.hpp"
#include "qpl/sim.hpp"

using namespace qpl;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

ScenarioConfig base(Mode mode) {
  ScenarioConfig c;
  c.mode = mode;
  c.lambda = 8.0;
  c.eps = 0.1;
  c.nu = 0.1;
  c.delta = 0.05;
  c.grid_n = 100;
  return c;
}

}  // namespace

TEST_CASE("transport is an exact shift") {
  const auto e = sine_scalar_plant();
  PlantState s{Vec::Zero(1), ActuatorGrid::from_function(10, 1.0, [](double x) { return x; })};
  for (int k = 0; k < 5; ++k) s = step(e.plant, 0.0, s);
  for (int k = 0; k <= 5; ++k) CHECK_THAT(s.u[k], WithinAbs(k / 10.0 + 0.5, 1e-15));
  for (int k = 6; k <= 10; ++k) CHECK(s.u[k] == 0.0);
}

TEST_CASE("RK4 state update matches the closed form") {
  const auto e = linear_scalar_plant(-1.0, 1.0, 0.5);
  Vec x(1);
  x << 1.0;
  PlantState s{x, ActuatorGrid::zeros(1000)};
  for (int k = 0; k < 1000; ++k) s = step(e.plant, 0.0, s);
  CHECK_THAT(s.X[0], WithinAbs(std::exp(-1.0), 1e-8));

  // Constant input reaching the plant from the start.
  PlantState c{x, ActuatorGrid(std::vector<double>(201, 0.3))};
  for (int k = 0; k < 200; ++k) c = step(e.plant, 0.3, c);
  CHECK_THAT(c.X[0], WithinAbs(double(oracle::scalar_decay(1.0, 0.3, 1.0)), 1e-10));
}

TEST_CASE("zero state stays at zero") {
  const auto e = linear_2d_plant();
  PlantState s{Vec::Zero(2), ActuatorGrid::zeros(20)};
  for (int k = 0; k < 100; ++k) s = step(e.plant, 0.0, s);
  CHECK(composite_norm(s.X, s.u) == 0.0);
}

TEST_CASE("resolve fills defaults and validates") {
  ScenarioConfig c;
  const Scenario s = resolve(c);
  CHECK(s.entry.id == "sine_scalar");
  CHECK(s.ledger.small_gain_ok);
  CHECK(s.design.delta > 0.0);
  CHECK(s.design.delta < std::min(s.ledger.sigma, s.design.nu));
  CHECK(s.steps() == 5000);

  ScenarioConfig bad = c;
  bad.plant = "missing";
  CHECK_THROWS_AS(resolve(bad), ConfigError);
  bad = c;
  bad.x0 = {1.0, 2.0};
  CHECK_THROWS_AS(resolve(bad), ConfigError);
  bad = c;
  bad.grid_n = 5;
  CHECK_THROWS_AS(resolve(bad), ConfigError);
  bad = c;
  bad.delta = 2.0;
  CHECK_THROWS_AS(resolve(bad), InvalidDelta);
}

TEST_CASE("inline linear plant gets an estimated certificate") {
  ScenarioConfig c = base(Mode::Nominal);
  LinearPlantConfig lin;
  lin.A = Mat::Constant(1, 1, -1.0);
  lin.B = Vec::Ones(1);
  lin.K = Vec::Constant(1, 1.0);
  c.linear = lin;
  c.plant = "linear";
  const Scenario s = resolve(c);
  CHECK_THAT(s.entry.feedback.ges.sigma, WithinRel(2.0, 0.1));
}

TEST_CASE("nominal mode converges on the integrator plant") {
  ScenarioConfig c = base(Mode::Nominal);
  c.plant = "linear_scalar";
  c.t_end = 40.0;
  c.x0 = {2.0};
  const SimTrace tr = run(resolve(c));
  REQUIRE_FALSE(tr.blew_up);
  CHECK(tr.records.back().norm < 1e-6 * tr.initial_norm());
  // After one delay the loop behaves like dx/dt = -x, up to the O(h^2) predictor quadrature.
  const auto& r1 = tr.records[100];
  const auto& r3 = tr.records[300];
  CHECK_THAT(r3.X[0], WithinRel(r1.X[0] * std::exp(-2.0), 5e-4));
  for (const auto& r : tr.records) REQUIRE(r.d == 0.0);
}

TEST_CASE("open loop stays inside the growth bound with U = 0") {
  ScenarioConfig c = base(Mode::OpenLoop);
  c.plant = "linear_scalar";
  c.t_end = 5.0;
  c.u0.segments = {{0.0, 1.0}, {0.4, -2.0}};
  const SimTrace tr = run(resolve(c));
  const double n0 = tr.initial_norm();
  for (const auto& r : tr.records) {
    REQUIRE(r.U == 0.0);
    REQUIRE(r.norm <= 2.0 * std::exp(r.t) * n0);
    REQUIRE(std::isnan(r.mu));
    REQUIRE_FALSE(r.phase);
  }
}

TEST_CASE("state quantization with zero data stays at zero") {
  ScenarioConfig c = base(Mode::StateQuantized);
  c.x0 = {0.0};
  c.t_end = 10.0;
  const SimTrace tr = run(resolve(c));
  REQUIRE(tr.t1_star);
  CHECK(*tr.t1_star == 0.0);
  for (const auto& r : tr.records) {
    REQUIRE(r.U == 0.0);
    REQUIRE(r.norm == 0.0);
  }
}

TEST_CASE("state quantized run: one phase change, zero control while zooming out") {
  ScenarioConfig c = base(Mode::StateQuantized);
  c.x0 = {3.0};
  c.t_end = 60.0;
  const Scenario s = resolve(c);
  const SimTrace tr = run(s);
  REQUIRE(tr.t1_star);
  int changes = 0;
  for (const auto& e : tr.events) changes += e.kind == SupervisorEvent::Kind::PhaseChange;
  CHECK(changes == 1);
  for (const auto& r : tr.records) {
    if (r.t < *tr.t1_star) REQUIRE(r.U == 0.0);
    REQUIRE(r.mu > 0.0);
  }
  // After the trigger the mismatch respects the M5 Delta mu bound while in range.
  const double M5 = s.ledger.M5;
  for (const auto& r : tr.records)
    if (r.t >= *tr.t1_star && r.norm / r.mu <= s.config.quantizer.M)
      REQUIRE(std::abs(r.d) <= M5 * s.config.quantizer.Delta * r.mu * (1 + 1e-9));
}

TEST_CASE("runs are deterministic") {
  ScenarioConfig c = base(Mode::InputQuantized);
  c.x0_random_scale = 2.0;
  c.u0.random_segments = 3;
  c.u0.random_scale = 1.0;
  c.seed = 77;
  c.t_end = 20.0;
  const SimTrace a = run(resolve(c));
  const SimTrace b = run(resolve(c));
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t k = 0; k < a.records.size(); ++k) {
    REQUIRE(a.records[k].X == b.records[k].X);
    REQUIRE(a.records[k].U == b.records[k].U);
  }
  CHECK_THAT(a.records[0].X.norm(), WithinAbs(2.0, 1e-12));
}

TEST_CASE("snapshots follow the stride") {
  ScenarioConfig c = base(Mode::Nominal);
  c.t_end = 2.0;
  c.snapshot_stride = 50;
  const SimTrace tr = run(resolve(c));
  REQUIRE(tr.snapshots.size() == 5);
  CHECK(tr.snapshots[1].t == Catch::Approx(0.5));
  CHECK(tr.snapshots[0].u.size() == 101);
}

TEST_CASE("grid refinement changes the final norm by under 1%") {
  ScenarioConfig c = base(Mode::Nominal);
  c.x0 = {2.0};
  c.t_end = 10.0;
  c.grid_n = 100;
  const double n100 = run(resolve(c)).records.back().norm;
  c.grid_n = 200;
  const double n200 = run(resolve(c)).records.back().norm;
  CHECK_THAT(n200, WithinRel(n100, 0.01));
}

TEST_CASE("blowups are reported, not thrown") {
  ScenarioConfig c = base(Mode::OpenLoop);
  LinearPlantConfig lin;
  lin.A = Mat::Constant(1, 1, 50.0);
  lin.B = Vec::Ones(1);
  lin.K = Vec::Constant(1, 60.0);
  lin.ges = GesCertificate{1.0, 10.0, 0.1};
  c.linear = lin;
  c.grid_n = 1000;
  c.delta = 0.05;
  c.t_end = 30.0;
  const SimTrace tr = run(resolve(c));
  CHECK(tr.blew_up);
  CHECK_FALSE(tr.records.empty());
}
