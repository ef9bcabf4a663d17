#include "qpl/gains.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "qpl/errors.hpp"
#include "qpl/rk4.hpp"

namespace qpl {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

double GainLedger::decay_rate() const { return std::log(Omega) / T; }

double GainLedger::envelope_power() const { return 2.0 - decay_rate() / L; }

double compute_M3(double L, double D, double kappa0) {
  return 1.0 + kappa0 * std::max(1.0, L * D) * std::exp(L * D);
}

double compute_M4(double L, double D, double kappa0) {
  return 1.0 / (1.0 + kappa0 * std::max(1.0, kappa0 * L * D) * std::exp(L * D * (1.0 + kappa0)));
}

double compute_M5(double L, double D, double kappa0) {
  return kappa0 * std::max(1.0, L * D) * std::exp(L * D);
}

double small_gain_h(double eps, double nu, double lambda, double D, double b3) {
  return (1.0 + eps) / (1.0 + lambda) * std::exp(D * (nu + 1.0)) * (b3 * (eps + 1.0) + 1.0);
}

GainLedger compute_gains(double L, double D, double kappa0, const GesCertificate& ges,
                         const DesignParams& d) {
  if (!(d.delta > 0.0 && d.delta < std::min(ges.sigma, d.nu)))
    throw InvalidDelta("delta must lie in (0, min{sigma, nu}) = (0, " +
                       std::to_string(std::min(ges.sigma, d.nu)) + ")");
  for (double v : {d.lambda, d.eps, d.nu, d.M, d.Delta, d.mu0, d.tau})
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("design parameters must be positive");

  GainLedger g;
  g.L = L;
  g.D = D;
  g.kappa0 = kappa0;
  g.M_sigma = ges.M_sigma;
  g.sigma = ges.sigma;
  g.b3 = ges.b3;
  g.lambda = d.lambda;
  g.eps = d.eps;
  g.nu = d.nu;
  g.delta = d.delta;
  g.M = d.M;
  g.Delta = d.Delta;
  g.mu0 = d.mu0;
  g.tau = d.tau;

  g.M3 = compute_M3(L, D, kappa0);
  g.M4 = compute_M4(L, D, kappa0);
  g.M5 = compute_M5(L, D, kappa0);

  g.small_gain_margin = std::exp(-D) - (g.b3 + 1.0) / (1.0 + g.lambda);
  g.small_gain_ok = g.small_gain_margin > 0.0;

  const double decay = std::exp(D * (g.nu + 1.0));
  g.phi = (1.0 + g.eps) / (1.0 + g.lambda) * decay;
  g.phi_margin = 1.0 - g.phi;
  g.phi_ok = g.phi < 1.0;
  g.phi1 = g.phi_ok ? (1.0 + g.eps) * g.phi * g.b3 / (1.0 - g.phi) : kNaN;
  g.phi1_margin = 1.0 - g.phi1;
  g.phi1_ok = g.phi_ok && g.phi1 < 1.0;

  if (g.phi_ok && g.phi1_ok) {
    const double inv_phi = 1.0 / (1.0 - g.phi);
    const double inv_phi1 = 1.0 / (1.0 - g.phi1);
    g.M0 = inv_phi * inv_phi1 * std::max(decay, g.phi * g.M_sigma) +
           inv_phi1 * std::max(g.M_sigma, (1.0 + g.eps) * inv_phi * decay * g.b3);
  } else {
    g.M0 = kNaN;
  }

  const double one_m0 = 1.0 + g.M0;
  g.MBar = g.M4 / (g.M3 * one_m0);
  g.Omega = g.M5 * g.Delta * (1.0 + g.lambda) * one_m0 * one_m0 / (g.M4 * g.M);
  g.T = -std::log(g.Omega / one_m0) / g.delta;

  g.thm1_threshold = g.M4 / (one_m0 * std::max(g.M5 * (1.0 + g.lambda) * one_m0, 2.0 * g.M5));
  g.thm2_threshold = g.M4 / (g.M5 * (1.0 + g.lambda) * one_m0 * one_m0);
  const double ratio = g.Delta / g.M;
  g.thm1_ok = g.phi1_ok && ratio < g.thm1_threshold;
  g.thm2_ok = g.phi1_ok && ratio < g.thm2_threshold;

  g.log_arg_margin = g.M * g.MBar - 2.0 * g.Delta;
  g.positive_log_arg_ok = g.log_arg_margin > 0.0;

  const double power = 1.0 - g.decay_rate() / L;
  const double growth = std::exp(2.0 * L * g.tau);

  const double inv_state = 1.0 / (g.mu0 * g.log_arg_margin);
  g.gamma = 2.0 / g.M4 * std::max(g.M4 * g.M * g.mu0 / g.Omega * growth, g.M3) *
            std::max(inv_state, 1.0) * std::pow(inv_state, power);
  if (!g.positive_log_arg_ok) g.gamma = kNaN;

  const double inv_input = g.M5 / (g.mu0 * g.M * g.MBar);
  g.gamma_bar = 2.0 / g.M4 * std::max(g.M4 * g.M / (g.Omega * g.M5) * growth * g.mu0, g.M3) *
                std::max(inv_input, 1.0) * std::pow(inv_input, power);
  return g;
}

GainLedger compute_gains(const PlantSpec& plant, const FeedbackSpec& fb,
                         const DesignParams& design) {
  return compute_gains(plant.L, plant.D, fb.kappa0, fb.ges, design);
}

double default_lambda(double D, double b3, double margin) {
  return (b3 + 1.0) * std::exp(D) / (1.0 - margin) - 1.0;
}

double default_delta(double sigma, double nu) { return 0.5 * std::min(sigma, nu); }

EpsNu search_eps_nu(double lambda, double D, double b3, int points_per_axis) {
  if (points_per_axis < 2) throw ConfigError("search_eps_nu needs at least two grid points");
  std::vector<double> axis(static_cast<std::size_t>(points_per_axis));
  // Log grid from 1e-4 to 1.
  for (int i = 0; i < points_per_axis; ++i)
    axis[i] = std::pow(10.0, -4.0 + 4.0 * i / (points_per_axis - 1));

  EpsNu best;
  best.margin = -std::numeric_limits<double>::infinity();
  for (double eps : axis) {
    for (double nu : axis) {
      const double h = small_gain_h(eps, nu, lambda, D, b3);
      const double phi = (1.0 + eps) / (1.0 + lambda) * std::exp(D * (nu + 1.0));
      double margin = std::min(1.0 - h, 1.0 - phi);
      if (phi < 1.0) margin = std::min(margin, 1.0 - (1.0 + eps) * phi * b3 / (1.0 - phi));
      if (margin > best.margin) best = {eps, nu, margin};
    }
  }
  if (!(best.margin > 0.0))
    throw Infeasible("no (eps, nu) on the search grid satisfies the small-gain inequality");
  return best;
}

GesCertificate estimate_ges(const PlantSpec& plant, const FeedbackSpec& fb, double horizon,
                            int trials, std::uint64_t seed) {
  constexpr double kDt = 0.01;
  constexpr double kInflate = 1.05;
  const int steps = std::max(1, static_cast<int>(std::ceil(horizon / kDt)));
  const double dt = horizon / steps;

  const auto closed = [&](double w) {
    return [&, w](double, const Vec& x) -> Vec { return plant.f(x, fb.kappa(x) + w); };
  };

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> radius(0.1, 10.0);

  // Worst normalized magnitude |x(t)|/|x0| over all trials, per time sample.
  std::vector<double> worst(static_cast<std::size_t>(steps) + 1, 0.0);
  for (int trial = 0; trial < trials; ++trial) {
    Vec x(plant.n);
    for (int i = 0; i < plant.n; ++i) x[i] = gauss(rng);
    x *= radius(rng) / x.norm();
    const double x0 = x.norm();
    worst[0] = std::max(worst[0], 1.0);
    for (int s = 1; s <= steps; ++s) {
      x = rk4_step(closed(0.0), x, dt);
      if (!x.allFinite()) throw NotContracting("nominal loop diverged");
      worst[s] = std::max(worst[s], x.norm() / x0);
    }
  }
  // Monotone majorant from the right.
  for (int s = steps - 1; s >= 0; --s) worst[s] = std::max(worst[s], worst[s + 1]);
  if (!(worst.back() < 0.5)) throw NotContracting("nominal loop does not decay over the horizon");

  // Least-squares fit of log(worst) = log(M) - sigma t over the samples above underflow noise.
  double st = 0, sy = 0, stt = 0, sty = 0;
  int count = 0;
  for (int s = 0; s <= steps; ++s) {
    if (worst[s] < 1e-12) break;
    const double t = s * dt, y = std::log(worst[s]);
    st += t;
    sy += y;
    stt += t * t;
    sty += t * y;
    ++count;
  }
  const double slope = (count * sty - st * sy) / (count * stt - st * st);
  if (!(slope < 0.0)) throw NotContracting("fitted decay rate is not positive");

  GesCertificate c;
  c.sigma = -slope / kInflate;
  double overshoot = 1.0;
  for (int s = 0; s <= steps; ++s)
    overshoot = std::max(overshoot, worst[s] * std::exp(c.sigma * s * dt));
  c.M_sigma = kInflate * overshoot;

  // ISS gain from constant disturbances, started at rest.
  double gain = 0.0;
  for (double w : {-5.0, -2.0, -1.0, -0.5, -0.1, 0.1, 0.5, 1.0, 2.0, 5.0}) {
    Vec x = Vec::Zero(plant.n);
    double peak = 0.0;
    for (int s = 1; s <= steps; ++s) {
      x = rk4_step(closed(w), x, dt);
      if (!x.allFinite()) throw NotContracting("nominal loop diverged under constant input");
      peak = std::max(peak, x.norm());
    }
    gain = std::max(gain, peak / std::abs(w));
  }
  c.b3 = kInflate * gain;
  return c;
}

}  // namespace qpl
