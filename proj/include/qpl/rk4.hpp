#pragma once

#include "qpl/model.hpp"

namespace qpl {

// Classical four-stage Runge-Kutta step for dx/dt = rhs(s, x), s in [0, h] measured from the
// start of the step.
template <class Rhs>
Vec rk4_step(Rhs&& rhs, const Vec& x, double h) {
  const Vec k1 = rhs(0.0, x);
  const Vec k2 = rhs(0.5 * h, x + 0.5 * h * k1);
  const Vec k3 = rhs(0.5 * h, x + 0.5 * h * k2);
  const Vec k4 = rhs(h, x + h * k3);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace qpl
