#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qpl/gains.hpp"
#include "qpl/model.hpp"
#include "qpl/sim.hpp"

namespace qpl {

enum class CheckStatus { Pass, Fail, Skipped };

const char* to_string(CheckStatus status);

struct MarginStats {
  long count = 0;
  double min_ratio = 0.0;
  double mean_ratio = 0.0;
  double max_ratio = 0.0;
};

// One verified inequality. The ratio is lhs / rhs with rhs floored at 1e-300, so
// max_violation_ratio <= 1 (up to the check's tolerance) exactly when the check holds.
struct CheckResult {
  std::string name;
  CheckStatus status = CheckStatus::Skipped;
  double max_violation_ratio = 0.0;
  double time_of_worst = 0.0;
  MarginStats margins;
  std::string note;

  bool holds() const { return status != CheckStatus::Fail; }
};

struct EnvelopeReport {
  std::vector<CheckResult> checks;

  bool overall() const;
  const CheckResult* find(const std::string& name) const;
};

// Open-loop growth |X| + ||u|| <= 2 e^{Lt}(|X0| + ||u0||) before the trigger, and the
// trigger-time bound when its log argument exceeds one.
CheckResult check_open_loop(const SimTrace& trace, const GainLedger& ledger);

// Window-end contraction |X| + ||w|| <= Omega^i C mu(t1*) and the in-window bound
// max{M0 e^{-delta(t - s_i)} (|X(s_i)| + ||w(s_i)||), Omega C mu_i}, where
// C = M3 MBar M (state quantization) or M4 M / ((1 + M0) M5) (input quantization).
CheckResult check_contraction(const SimTrace& trace, const GainLedger& ledger);

// Pointwise gamma (or gamma_bar) envelope over the whole trace, plus ln(Omega)/T < 0.
CheckResult check_theorem_envelope(const SimTrace& trace, const GainLedger& ledger);

// Final-norm decay: the norm at t1* + windows T (or at the end of the trace if sooner is
// unavailable) must be below factor times the initial norm.
CheckResult check_decay(const SimTrace& trace, const GainLedger& ledger, int windows = 5,
                        double factor = 1e-3);

// Randomized audit of M4 ||(X,u)|| <= ||(X,w)|| <= M3 ||(X,u)|| with tolerance 1e-9. Samples
// draw X uniformly and u as a random piecewise-constant profile. m3_scale shrinks M3 for
// negative controls.
CheckResult check_norm_equivalence(const PlantSpec& plant, const FeedbackSpec& fb, int samples,
                                   std::uint64_t seed, int grid_n = 1000, double m3_scale = 1.0);

// All trace checks applicable to the trace's mode.
EnvelopeReport verify_trace(const SimTrace& trace, const GainLedger& ledger);

}  // namespace qpl
