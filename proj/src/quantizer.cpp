#include "qpl/quantizer.hpp"

#include <cmath>
#include <limits>

#include "qpl/errors.hpp"

namespace qpl {

void QuantizerSpec::validate() const {
  if (!(M > 0.0 && Delta > 0.0 && M_hat > 0.0) || !std::isfinite(M) || !std::isfinite(Delta))
    throw ConfigError("quantizer: M, Delta, M_hat must be positive and finite");
  if (!(M > Delta)) throw ConfigError("quantizer: requires M > Delta");
  if (!(M_hat < M)) throw ConfigError("quantizer: requires M_hat < M");
  if (!(M_hat <= Delta)) throw ConfigError("quantizer: dead zone M_hat must not exceed Delta");
  if (kind == QuantizerKind::Ramped && !(rho > 0.0 && rho <= 0.5))
    throw ConfigError("quantizer: rho must lie in (0, 0.5]");
}

double QuantizerSpec::lipschitz_bound() const {
  switch (kind) {
    case QuantizerKind::Ramped:
      return 1.0 / rho;
    case QuantizerKind::Identity:
      return 1.0;
    case QuantizerKind::Staircase:
      break;
  }
  return std::numeric_limits<double>::infinity();
}

ZoomValue::ZoomValue(double value) : mu(value) {
  if (!(value > 0.0) || !std::isfinite(value))
    throw ConfigError("zoom variable mu must be positive");
}

namespace {

// Quantizer restricted to 0 <= v <= M.
double staircase(const QuantizerSpec& q, double v) {
  const double z = q.M_hat;
  if (v <= z) return 0.0;
  const double step = 2.0 * q.Delta;
  const double r = (v - z) / step;
  const auto level = [&](double cell) { return z + (cell + 0.5) * step; };
  if (q.kind == QuantizerKind::Staircase) return level(std::floor(r));

  const double ramp = q.rho * step;
  // The first riser starts at the dead-zone edge so the dead zone stays exactly zero.
  if (v - z <= ramp) return (v - z) / ramp * level(0.0);
  const double k = std::round(r);
  if (k >= 1.0) {
    const double boundary = z + k * step;
    if (std::abs(v - boundary) < 0.5 * ramp)
      return level(k - 1.0) + (v - (boundary - 0.5 * ramp)) / ramp * step;
  }
  return level(std::floor(r));
}

}  // namespace

double base_quantize(const QuantizerSpec& q, double v) {
  if (!std::isfinite(v)) throw NonFinite("quantizer input is not finite");
  if (q.kind == QuantizerKind::Identity) return v;
  const double a = std::abs(v);
  const double out = a <= q.M ? staircase(q, a) : staircase(q, q.M) + (a - q.M);
  return std::signbit(v) ? -out : out;
}

QuantizerSpec state_coordinate_spec(const QuantizerSpec& q, int n) {
  QuantizerSpec c = q;
  c.Delta = q.Delta / (2.0 * std::sqrt(static_cast<double>(n)));
  return c;
}

QuantizerSpec actuator_sample_spec(const QuantizerSpec& q) {
  QuantizerSpec c = q;
  c.Delta = q.Delta / 2.0;
  return c;
}

void validate_state_quantizer(const QuantizerSpec& q, int n) {
  q.validate();
  state_coordinate_spec(q, n).validate();
  actuator_sample_spec(q).validate();
}

QuantizedState quantize_state(const QuantizerSpec& q, ZoomValue mu, const Vec& X,
                              const ActuatorGrid& u) {
  const auto n = static_cast<int>(X.size());
  const QuantizerSpec qx = state_coordinate_spec(q, n);
  const QuantizerSpec qu = actuator_sample_spec(q);
  QuantizedState out{Vec(X.size()), u};
  for (int i = 0; i < n; ++i) out.X[i] = mu.mu * base_quantize(qx, X[i] / mu.mu);
  for (std::size_t k = 0; k < u.size(); ++k) out.u[k] = mu.mu * base_quantize(qu, u[k] / mu.mu);
  return out;
}

double quantize_input(const QuantizerSpec& q, ZoomValue mu, double u_nominal) {
  return mu.mu * base_quantize(q, u_nominal / mu.mu);
}

}  // namespace qpl
