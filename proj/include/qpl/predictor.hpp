#pragma once

#include <vector>

#include "qpl/model.hpp"
#include "qpl/quantizer.hpp"

namespace qpl {

// Predictor values at the actuator grid nodes x_k = k D / N. values[0] is the seed.
struct PredictorGrid {
  std::vector<Vec> values;

  const Vec& at_delay() const { return values.back(); }
  double sup_norm() const;
};

// max{1, L D} e^{L D}: Gronwall factor bounding the predictor by the composite norm.
double gronwall_factor(double L, double D);

// p(x) = X + int_0^x f(p(xi), u(xi)) dxi, marched with the trapezoidal rule (explicit Euler
// guess followed by two trapezoidal fixed-point sweeps). Requires (D/N) L < 1.
PredictorGrid predictor_exact(const PlantSpec& plant, const Vec& X, const ActuatorGrid& u);

// p_mu(x) = q1mu(X) + int_0^x f(p_mu(y), q2mu(u(y))) dy.
PredictorGrid predictor_quantized(const PlantSpec& plant, const QuantizerSpec& q, ZoomValue mu,
                                  const Vec& X, const ActuatorGrid& u);

// pi(x) = X + int_0^x f(pi(xi), kappa(pi(xi)) + w(xi)) dxi. Requires (D/N) L (1 + kappa0) < 1.
PredictorGrid predictor_pi(const PlantSpec& plant, const FeedbackSpec& fb, const Vec& X,
                           const ActuatorGrid& w);

// w = u - kappa(p).
ActuatorGrid backstepping_direct(const PlantSpec& plant, const FeedbackSpec& fb, const Vec& X,
                                 const ActuatorGrid& u);
// u = w + kappa(pi).
ActuatorGrid backstepping_inverse(const PlantSpec& plant, const FeedbackSpec& fb, const Vec& X,
                                  const ActuatorGrid& w);

// kappa(p(D)).
double u_nominal(const PlantSpec& plant, const FeedbackSpec& fb, const Vec& X,
                 const ActuatorGrid& u);

// d = kappa(p_mu(D)) - kappa(p(D)).
double mismatch_d(const PlantSpec& plant, const FeedbackSpec& fb, const QuantizerSpec& q,
                  ZoomValue mu, const Vec& X, const ActuatorGrid& u);

// dbar = U_nom - mu qbar(U_nom / mu).
double mismatch_dbar(const PlantSpec& plant, const FeedbackSpec& fb, const QuantizerSpec& q,
                     ZoomValue mu, const Vec& X, const ActuatorGrid& u);

}  // namespace qpl
