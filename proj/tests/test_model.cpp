#include <catch_amalgamated.hpp>
#include <cmath>

#include "qpl/errors.hpp"
#include "qpl/model.hpp"

using namespace qpl;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("composite norm adds Euclidean state and sup actuator norms") {
  Vec X(2);
  X << 3.0, 4.0;
  CHECK_THAT(composite_norm(X, ActuatorGrid::zeros(10)), WithinAbs(5.0, 0.0));

  Vec z = Vec::Zero(1);
  const auto u = ActuatorGrid::from_function(100, 1.0, [](double x) { return std::sin(M_PI * x); });
  CHECK_THAT(composite_norm(z, u), WithinAbs(1.0, 0.0));
  CHECK_THAT(composite_norm(X, ActuatorGrid({-7.0, 2.0})), WithinAbs(12.0, 0.0));
}

TEST_CASE("piecewise-constant actuator profiles are right-continuous") {
  const std::vector<std::pair<double, double>> segs{{0.5, -1.0}, {0.0, 2.0}};
  const auto u = ActuatorGrid::from_segments(4, 1.0, segs);
  REQUIRE(u.size() == 5);
  CHECK(u[0] == 2.0);
  CHECK(u[1] == 2.0);
  CHECK(u[2] == -1.0);
  CHECK(u[4] == -1.0);
  CHECK(u.sup_norm() == 2.0);
}

TEST_CASE("actuator grids need at least one cell") {
  CHECK_THROWS_AS(ActuatorGrid::zeros(0), ConfigError);
  CHECK_THROWS_AS(ActuatorGrid(std::vector<double>{1.0}), ConfigError);
}

TEST_CASE("builtin plants carry their Lipschitz and certificate constants") {
  const auto plants = builtin_plants(1.0);
  REQUIRE(plants.size() == 3);
  CHECK(plants[0].id == "linear_scalar");
  CHECK(plants[1].id == "sine_scalar");
  CHECK(plants[2].id == "linear_2d");

  CHECK(plants[0].plant.L == 1.0);
  CHECK(plants[0].feedback.kappa0 == 1.0);
  CHECK(plants[1].plant.L == 1.5);
  CHECK(plants[1].feedback.kappa0 == 0.5);
  CHECK_THAT(plants[2].plant.L, WithinRel((1.0 + std::sqrt(5.0)) / 2.0, 1e-12));

  for (const auto& e : plants) {
    INFO(e.id);
    CHECK(audit_plant_lipschitz(e.plant, 20000, 3) <= 1e-12);
    CHECK(audit_feedback_lipschitz(e.plant, e.feedback, 20000, 4) <= 1e-12);
    CHECK_NOTHROW(e.plant.validate());
    CHECK_NOTHROW(e.feedback.validate());
  }
}

TEST_CASE("linear scalar plant certificate") {
  const auto e = linear_scalar_plant(-1.0, 2.0, 1.5, 1.0);
  CHECK(e.feedback.ges.M_sigma == 1.0);
  CHECK_THAT(e.feedback.ges.sigma, WithinAbs(4.0, 1e-15));
  CHECK_THAT(e.feedback.ges.b3, WithinAbs(0.5, 1e-15));
  CHECK_THROWS_AS(linear_scalar_plant(1.0, 1.0, 1.0), ConfigError);
}

TEST_CASE("sine plant vector field and feedback") {
  const auto e = sine_scalar_plant();
  Vec x(1);
  x << 0.7;
  CHECK_THAT(e.plant.f(x, 0.3)[0], WithinAbs(-0.7 + 0.5 * std::sin(0.7) + 0.3, 1e-15));
  CHECK_THAT(e.feedback.kappa(x), WithinAbs(-0.5 * std::sin(0.7), 1e-15));
  // Closed loop without w reduces to dx/dt = -x.
  CHECK_THAT(e.plant.f(x, e.feedback.kappa(x))[0], WithinAbs(-0.7, 1e-15));
}

TEST_CASE("linear plant rejects mismatched dimensions") {
  Mat A = Mat::Identity(2, 2) * -1.0;
  Vec B = Vec::Ones(3);
  CHECK_THROWS_AS(linear_plant(A, B, Vec::Ones(2), 1.0, {}), ConfigError);
}

TEST_CASE("validation rejects bad constants") {
  PlantSpec p;
  p.f = [](const Vec& x, double) { return x; };
  p.D = 0.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  GesCertificate g{0.5, 1.0, 1.0};
  CHECK_THROWS_AS(g.validate(), ConfigError);
  CHECK(find_builtin("nope") == std::nullopt);
}
