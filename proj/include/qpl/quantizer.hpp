#pragma once

#include "qpl/model.hpp"

namespace qpl {

enum class QuantizerKind {
  Ramped,     // locally Lipschitz staircase (default)
  Staircase,  // discontinuous staircase, for comparison runs
  Identity,   // exact measurements
};

// Scalar zoom quantizer geometry.
//
// The base map is odd. It is exactly zero on [-M_hat, M_hat]. Beyond the dead zone it is
// a staircase with step 2*Delta whose flat levels sit at cell midpoints. In the Ramped
// variant each riser is a linear ramp of width rho*step, which makes the map globally
// Lipschitz with constant 1/rho. Past |v| = M the map continues with unit slope, so
// |q(v) - v| <= Delta holds on the whole line and |q(v)| > M - Delta whenever |v| > M.
struct QuantizerSpec {
  double M = 10.0;
  double Delta = 0.5;
  double M_hat = 0.25;
  double rho = 0.25;
  QuantizerKind kind = QuantizerKind::Ramped;

  // M > Delta, M_hat < M, 0 < rho <= 0.5, and M_hat <= Delta (the dead zone must respect
  // the error bound, otherwise P1 fails just inside it).
  void validate() const;
  // Slope bound of base_quantize (1/rho for the ramped variant, infinite otherwise).
  double lipschitz_bound() const;
};

struct ZoomValue {
  double mu;
  explicit ZoomValue(double value);
};

double base_quantize(const QuantizerSpec& q, double v);

// Component quantizers used by the state quantizer q_mu(X, u) = (mu q1(X/mu), mu q2(u/mu)).
// The joint error budget Delta is split evenly: Delta/2 for the state part, spread over the n
// coordinates as Delta/(2 sqrt(n)) each, and Delta/2 for every actuator sample. This keeps
// ||(q1(X) - X, q2(u) - u)|| <= Delta for the composite norm |X| + ||u||_inf.
QuantizerSpec state_coordinate_spec(const QuantizerSpec& q, int n);
QuantizerSpec actuator_sample_spec(const QuantizerSpec& q);
// Throws ConfigError unless both component specs are valid.
void validate_state_quantizer(const QuantizerSpec& q, int n);

struct QuantizedState {
  Vec X;
  ActuatorGrid u;
};

QuantizedState quantize_state(const QuantizerSpec& q, ZoomValue mu, const Vec& X,
                              const ActuatorGrid& u);

// mu * q(U / mu) with the scalar quantizer itself (input quantization).
double quantize_input(const QuantizerSpec& q, ZoomValue mu, double u_nominal);

}  // namespace qpl
