#include "qpl/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qpl/errors.hpp"

namespace qpl {

double PredictorGrid::sup_norm() const {
  double m = 0.0;
  for (const auto& v : values) m = std::max(m, v.norm());
  return m;
}

double gronwall_factor(double L, double D) { return std::max(1.0, L * D) * std::exp(L * D); }

namespace {

// Forward march of y(x) = seed + int_0^x g(k, y) over the grid nodes.
template <class Integrand>
PredictorGrid march(const Vec& seed, int cells, double h, Integrand&& g) {
  PredictorGrid out;
  out.values.reserve(static_cast<std::size_t>(cells) + 1);
  out.values.push_back(seed);
  Vec y = seed;
  for (int k = 0; k < cells; ++k) {
    const Vec gk = g(k, y);
    Vec guess = y + h * gk;
    guess = y + 0.5 * h * (gk + g(k + 1, guess));
    y = y + 0.5 * h * (gk + g(k + 1, guess));
    out.values.push_back(y);
  }
  if (!y.allFinite()) throw NonFinite("predictor march overflowed");
  return out;
}

void require_contraction(double h, double lipschitz, const char* what) {
  if (!(h * lipschitz < 1.0))
    throw GridTooCoarse(std::string(what) +
                        ": grid step times Lipschitz constant must be < 1 (got " +
                        std::to_string(h * lipschitz) + ")");
}

void require_dims(const PlantSpec& plant, const Vec& X) {
  if (X.size() != plant.n) throw ConfigError("state dimension does not match plant");
}

}  // namespace

PredictorGrid predictor_exact(const PlantSpec& plant, const Vec& X, const ActuatorGrid& u) {
  require_dims(plant, X);
  const int cells = u.cells();
  const double h = plant.D / cells;
  require_contraction(h, plant.L, "predictor");
  return march(X, cells, h, [&](int k, const Vec& p) { return plant.f(p, u[k]); });
}

PredictorGrid predictor_quantized(const PlantSpec& plant, const QuantizerSpec& q, ZoomValue mu,
                                  const Vec& X, const ActuatorGrid& u) {
  const QuantizedState m = quantize_state(q, mu, X, u);
  return predictor_exact(plant, m.X, m.u);
}

PredictorGrid predictor_pi(const PlantSpec& plant, const FeedbackSpec& fb, const Vec& X,
                           const ActuatorGrid& w) {
  require_dims(plant, X);
  const int cells = w.cells();
  const double h = plant.D / cells;
  require_contraction(h, plant.L * (1.0 + fb.kappa0), "inverse predictor");
  return march(X, cells, h, [&](int k, const Vec& p) { return plant.f(p, fb.kappa(p) + w[k]); });
}

ActuatorGrid backstepping_direct(const PlantSpec& plant, const FeedbackSpec& fb, const Vec& X,
                                 const ActuatorGrid& u) {
  const PredictorGrid p = predictor_exact(plant, X, u);
  ActuatorGrid w = u;
  for (std::size_t k = 0; k < u.size(); ++k) w[k] = u[k] - fb.kappa(p.values[k]);
  return w;
}

ActuatorGrid backstepping_inverse(const PlantSpec& plant, const FeedbackSpec& fb, const Vec& X,
                                  const ActuatorGrid& w) {
  const PredictorGrid pi = predictor_pi(plant, fb, X, w);
  ActuatorGrid u = w;
  for (std::size_t k = 0; k < w.size(); ++k) u[k] = w[k] + fb.kappa(pi.values[k]);
  return u;
}

double u_nominal(const PlantSpec& plant, const FeedbackSpec& fb, const Vec& X,
                 const ActuatorGrid& u) {
  return fb.kappa(predictor_exact(plant, X, u).at_delay());
}

double mismatch_d(const PlantSpec& plant, const FeedbackSpec& fb, const QuantizerSpec& q,
                  ZoomValue mu, const Vec& X, const ActuatorGrid& u) {
  return fb.kappa(predictor_quantized(plant, q, mu, X, u).at_delay()) -
         fb.kappa(predictor_exact(plant, X, u).at_delay());
}

double mismatch_dbar(const PlantSpec& plant, const FeedbackSpec& fb, const QuantizerSpec& q,
                     ZoomValue mu, const Vec& X, const ActuatorGrid& u) {
  const double nominal = u_nominal(plant, fb, X, u);
  return nominal - quantize_input(q, mu, nominal);
}

}  // namespace qpl
