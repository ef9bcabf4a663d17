#pragma once

#include <cstdint>

#include "qpl/model.hpp"

namespace qpl {

// Free design parameters of the switched controller.
struct DesignParams {
  double lambda = 8.0;
  double eps = 0.1;
  double nu = 0.1;
  double delta = 0.05;
  double M = 10.0;
  double Delta = 5e-5;
  double mu0 = 1.0;
  double tau = 0.5;
};

// Every constant of the zoom-in/zoom-out design, with the feasibility flags and margins.
// Derived constants that depend on M0 are NaN when phi or phi1 is not below one.
struct GainLedger {
  // Plant and certificate.
  double L = 0, D = 0, kappa0 = 0, M_sigma = 0, sigma = 0, b3 = 0;
  // Design.
  double lambda = 0, eps = 0, nu = 0, delta = 0, M = 0, Delta = 0, mu0 = 0, tau = 0;
  // Derived.
  double M3 = 0, M4 = 0, M5 = 0, MBar = 0, phi = 0, phi1 = 0, M0 = 0, Omega = 0, T = 0;
  double gamma = 0, gamma_bar = 0;
  // Margins: positive means the corresponding condition holds.
  double small_gain_margin = 0;  // e^{-D} - (b3 + 1)/(1 + lambda)
  double phi_margin = 0;         // 1 - phi
  double phi1_margin = 0;        // 1 - phi1
  double thm1_threshold = 0;     // bound on Delta/M for state quantization
  double thm2_threshold = 0;     // bound on Delta/M for input quantization
  double log_arg_margin = 0;     // M MBar - 2 Delta
  // Flags.
  bool small_gain_ok = false, phi_ok = false, phi1_ok = false;
  bool thm1_ok = false, thm2_ok = false, positive_log_arg_ok = false;

  // ln(Omega)/T, the decay exponent of the closed-loop envelopes.
  double decay_rate() const;
  // Exponent 2 - ln(Omega)/(T L) applied to the initial norm in the envelopes.
  double envelope_power() const;
};

// M3 = 1 + kappa0 max{1, LD} e^{LD}.
double compute_M3(double L, double D, double kappa0);
// M4 = 1 / (1 + kappa0 max{1, kappa0 L D} e^{LD(1 + kappa0)}).
double compute_M4(double L, double D, double kappa0);
// M5 = kappa0 max{1, LD} e^{LD}.
double compute_M5(double L, double D, double kappa0);

// Throws InvalidDelta unless 0 < delta < min{sigma, nu}. Feasibility flags never throw.
GainLedger compute_gains(double L, double D, double kappa0, const GesCertificate& ges,
                         const DesignParams& design);
GainLedger compute_gains(const PlantSpec& plant, const FeedbackSpec& fb,
                         const DesignParams& design);

// Smallest lambda with (b3 + 1)/(1 + lambda) < e^{-D}, inflated so the inequality holds
// with the requested relative margin.
double default_lambda(double D, double b3, double margin = 0.2);
// Midpoint of (0, min{sigma, nu}).
double default_delta(double sigma, double nu);

// h(eps, nu) = (1 + eps)/(1 + lambda) e^{D(nu + 1)} (b3 (eps + 1) + 1).
double small_gain_h(double eps, double nu, double lambda, double D, double b3);

struct EpsNu {
  double eps = 0;
  double nu = 0;
  double margin = 0;  // min over 1 - h, 1 - phi, 1 - phi1
};

// Log-grid search over (1e-4, 1]^2 for the pair with the largest margin. Throws Infeasible.
EpsNu search_eps_nu(double lambda, double D, double b3, int points_per_axis = 41);

// Fits a certificate of the delay-free nominal loop from simulations. Throws NotContracting.
GesCertificate estimate_ges(const PlantSpec& plant, const FeedbackSpec& fb, double horizon = 20.0,
                            int trials = 32, std::uint64_t seed = 1);

}  // namespace qpl
