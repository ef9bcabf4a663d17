#include "qpl/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "qpl/errors.hpp"

namespace qpl {

void PlantSpec::validate() const {
  if (n < 1) throw ConfigError("plant state dimension must be positive");
  if (!(D > 0.0) || !std::isfinite(D)) throw ConfigError("plant delay D must be positive");
  if (!(L > 0.0) || !std::isfinite(L))
    throw ConfigError("plant Lipschitz constant must be positive");
  if (!f) throw ConfigError("plant vector field is empty");
}

void GesCertificate::validate() const {
  if (!(M_sigma >= 1.0)) throw ConfigError("GES overshoot M_sigma must be >= 1");
  if (!(sigma > 0.0)) throw ConfigError("GES decay rate sigma must be positive");
  if (!(b3 > 0.0)) throw ConfigError("GES gain b3 must be positive");
}

void FeedbackSpec::validate() const {
  if (!kappa) throw ConfigError("feedback law is empty");
  if (!(kappa0 > 0.0)) throw ConfigError("feedback Lipschitz constant must be positive");
  ges.validate();
}

ActuatorGrid::ActuatorGrid(std::vector<double> values) : values_(std::move(values)) {
  if (values_.size() < 2) throw ConfigError("actuator grid needs at least one cell");
}

ActuatorGrid ActuatorGrid::zeros(int cells) {
  if (cells < 1) throw ConfigError("actuator grid needs at least one cell");
  return ActuatorGrid(std::vector<double>(static_cast<std::size_t>(cells) + 1, 0.0));
}

ActuatorGrid ActuatorGrid::from_function(int cells, double D,
                                         const std::function<double(double)>& u) {
  ActuatorGrid g = zeros(cells);
  const double h = D / cells;
  for (int k = 0; k <= cells; ++k) g[k] = u(k * h);
  return g;
}

ActuatorGrid ActuatorGrid::from_segments(int cells, double D,
                                         std::span<const std::pair<double, double>> segments) {
  ActuatorGrid g = zeros(cells);
  if (segments.empty()) return g;
  std::vector<std::pair<double, double>> sorted(segments.begin(), segments.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  const double h = D / cells;
  for (int k = 0; k <= cells; ++k) {
    const double x = k * h;
    double v = 0.0;
    for (const auto& [start, value] : sorted) {
      if (start <= x + 1e-12 * D)
        v = value;
      else
        break;
    }
    g[k] = v;
  }
  return g;
}

double ActuatorGrid::sup_norm() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

double composite_norm(const Vec& X, const ActuatorGrid& u) { return X.norm() + u.sup_norm(); }

double composite_norm(const CompositeState& s) { return composite_norm(s.X, s.u); }

PlantEntry linear_scalar_plant(double a, double b, double k, double D) {
  const double closed = a - b * k;
  if (!(closed < 0.0)) throw ConfigError("linear_scalar: a - b k must be negative");
  PlantEntry e;
  e.id = "linear_scalar";
  e.description = "dx/dt = a x + b u, kappa(x) = -k x";
  e.plant.n = 1;
  e.plant.D = D;
  e.plant.L = std::max(std::abs(a), std::abs(b));
  e.plant.f = [a, b](const Vec& x, double u) {
    Vec dx(1);
    dx[0] = a * x[0] + b * u;
    return dx;
  };
  e.feedback.kappa = [k](const Vec& x) { return -k * x[0]; };
  e.feedback.kappa0 = std::abs(k);
  // dx/dt = (a - bk) x + b w: |x(t)| <= e^{-(bk-a)t}|x0| + |b|/(bk-a) sup|w|.
  e.feedback.ges = {1.0, -closed, std::abs(b) / (-closed)};
  return e;
}

PlantEntry sine_scalar_plant(double D) {
  PlantEntry e;
  e.id = "sine_scalar";
  e.description = "dx/dt = -x + 0.5 sin(x) + u, kappa(x) = -0.5 sin(x)";
  e.plant.n = 1;
  e.plant.D = D;
  e.plant.L = 1.5;
  e.plant.f = [](const Vec& x, double u) {
    Vec dx(1);
    dx[0] = -x[0] + 0.5 * std::sin(x[0]) + u;
    return dx;
  };
  e.feedback.kappa = [](const Vec& x) { return -0.5 * std::sin(x[0]); };
  e.feedback.kappa0 = 0.5;
  // Nominal loop is dx/dt = -x + w.
  e.feedback.ges = {1.0, 1.0, 1.0};
  return e;
}

PlantEntry linear_2d_plant(double D) {
  Mat A(2, 2);
  A << -1.0, 1.0, -1.0, 0.0;
  Vec B(2);
  B << 0.0, 1.0;
  Vec K(2);
  K << 0.0, 1.0;
  // A - B K = -I + [[0, 1], [-1, 0]] is normal, so |e^{(A-BK)t}| = e^{-t} and the
  // convolution gain of the unit-norm input direction is 1.
  PlantEntry e = linear_plant(A, B, K, D, {1.0, 1.0, 1.0}, "linear_2d");
  e.description = "dx1/dt = -x1 + x2, dx2/dt = -x1 + u, kappa(x) = -x2";
  return e;
}

PlantEntry linear_plant(const Mat& A, const Vec& B, const Vec& K, double D,
                        const GesCertificate& ges, std::string id) {
  const auto n = A.rows();
  if (A.cols() != n || B.size() != n || K.size() != n)
    throw ConfigError("linear plant: A must be n x n and B, K of length n");
  PlantEntry e;
  e.id = std::move(id);
  e.description = "dX/dt = A X + B u, kappa(X) = -K X";
  e.plant.n = static_cast<int>(n);
  e.plant.D = D;
  Eigen::JacobiSVD<Mat> svd(A);
  e.plant.L = std::max(svd.singularValues()(0), B.norm());
  e.plant.f = [A, B](const Vec& x, double u) -> Vec { return A * x + B * u; };
  e.feedback.kappa = [K](const Vec& x) { return -K.dot(x); };
  e.feedback.kappa0 = K.norm();
  e.feedback.ges = ges;
  return e;
}

std::vector<PlantEntry> builtin_plants(double D) {
  return {linear_scalar_plant(0.0, 1.0, 1.0, D), sine_scalar_plant(D), linear_2d_plant(D)};
}

std::optional<PlantEntry> find_builtin(const std::string& id, double D) {
  for (auto& e : builtin_plants(D))
    if (e.id == id) return e;
  return std::nullopt;
}

double audit_plant_lipschitz(const PlantSpec& plant, int trials, std::uint64_t seed, double scale) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-scale, scale);
  double worst = -std::numeric_limits<double>::infinity();
  Vec x1(plant.n), x2(plant.n);
  for (int t = 0; t < trials; ++t) {
    for (int i = 0; i < plant.n; ++i) {
      x1[i] = dist(rng);
      x2[i] = dist(rng);
    }
    const double u1 = dist(rng), u2 = dist(rng);
    const double lhs = (plant.f(x1, u1) - plant.f(x2, u2)).norm();
    const double rhs = plant.L * ((x1 - x2).norm() + std::abs(u1 - u2));
    worst = std::max(worst, lhs - rhs);
  }
  return worst;
}

double audit_feedback_lipschitz(const PlantSpec& plant, const FeedbackSpec& fb, int trials,
                                std::uint64_t seed, double scale) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-scale, scale);
  double worst = -std::numeric_limits<double>::infinity();
  Vec p(plant.n), q(plant.n);
  for (int t = 0; t < trials; ++t) {
    for (int i = 0; i < plant.n; ++i) {
      p[i] = dist(rng);
      q[i] = dist(rng);
    }
    worst = std::max(worst, std::abs(fb.kappa(p) - fb.kappa(q)) - fb.kappa0 * (p - q).norm());
  }
  return worst;
}

}  // namespace qpl
