#include "qpl/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "qpl/predictor.hpp"
#include "qpl/supervisor.hpp"

namespace qpl {

namespace {

constexpr double kFloor = 1e-300;
constexpr double kTol = 1e-9;

// Accumulates lhs/rhs ratios and remembers where the worst one occurred.
class RatioTracker {
 public:
  void add(double lhs, double rhs, double t) {
    const double r = lhs / std::max(rhs, kFloor);
    if (stats_.count == 0 || r > stats_.max_ratio) {
      stats_.max_ratio = r;
      worst_t_ = t;
    }
    stats_.min_ratio = stats_.count == 0 ? r : std::min(stats_.min_ratio, r);
    sum_ += r;
    ++stats_.count;
  }

  bool empty() const { return stats_.count == 0; }
  bool within(double tol) const { return stats_.max_ratio <= 1.0 + tol; }

  void fill(CheckResult& out) const {
    out.margins = stats_;
    out.margins.mean_ratio = stats_.count > 0 ? sum_ / static_cast<double>(stats_.count) : 0.0;
    out.max_violation_ratio = stats_.max_ratio;
    out.time_of_worst = worst_t_;
  }

 private:
  MarginStats stats_;
  double sum_ = 0.0;
  double worst_t_ = 0.0;
};

bool quantized(Mode m) { return m == Mode::StateQuantized || m == Mode::InputQuantized; }

TriggerKind trigger_of(Mode m) {
  return m == Mode::InputQuantized ? TriggerKind::ExactState : TriggerKind::QuantizedState;
}

// First record index with t >= time (within a tenth of a step).
std::size_t index_at(const SimTrace& trace, double time) {
  const double k = std::ceil(time / trace.dt - 0.1);
  return static_cast<std::size_t>(std::max(0.0, k));
}

CheckResult skipped(std::string name, std::string note) {
  CheckResult r;
  r.name = std::move(name);
  r.status = CheckStatus::Skipped;
  r.note = std::move(note);
  return r;
}

}  // namespace

const char* to_string(CheckStatus status) {
  switch (status) {
    case CheckStatus::Pass:
      return "pass";
    case CheckStatus::Fail:
      return "fail";
    case CheckStatus::Skipped:
      return "skipped";
  }
  return "unknown";
}

bool EnvelopeReport::overall() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.holds(); });
}

const CheckResult* EnvelopeReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

CheckResult check_open_loop(const SimTrace& trace, const GainLedger& ledger) {
  const std::string name = "open_loop";
  if (trace.records.empty()) return skipped(name, "empty trace");
  if (!quantized(trace.mode) && trace.mode != Mode::OpenLoop)
    return skipped(name, "no open-loop phase in this mode");

  const double norm0 = trace.initial_norm();
  RatioTracker growth;
  for (const auto& rec : trace.records) {
    if (trace.t1_star && rec.t >= *trace.t1_star - 0.1 * trace.dt) break;
    growth.add(rec.norm, 2.0 * std::exp(ledger.L * rec.t) * norm0, rec.t);
  }

  CheckResult r;
  r.name = name;
  growth.fill(r);
  r.status = growth.empty() || growth.within(kTol) ? CheckStatus::Pass : CheckStatus::Fail;
  std::ostringstream note;
  note << "pre-trigger steps " << r.margins.count;

  if (quantized(trace.mode)) {
    const auto bound = trigger_time_bound(ledger, trigger_of(trace.mode), norm0);
    if (trace.t1_star) {
      note << "; t1* = " << *trace.t1_star;
      if (bound) {
        note << ", bound " << *bound;
        const double ratio = *trace.t1_star / std::max(*bound, kFloor);
        if (*trace.t1_star > *bound + kTol) {
          r.status = CheckStatus::Fail;
          if (ratio > r.max_violation_ratio) {
            r.max_violation_ratio = ratio;
            r.time_of_worst = *trace.t1_star;
          }
        }
      } else {
        note << " (trigger bound vacuous)";
      }
    } else {
      const double t_end = trace.records.back().t;
      if (bound && *bound < t_end) {
        r.status = CheckStatus::Fail;
        note << "; trigger missing although its bound " << *bound << " elapsed";
      } else if (r.status == CheckStatus::Pass) {
        r.status = CheckStatus::Skipped;
        note << "; MissingTrigger: horizon shorter than the trigger bound";
      }
    }
  }
  r.note = note.str();
  return r;
}

CheckResult check_contraction(const SimTrace& trace, const GainLedger& ledger) {
  const std::string name = "contraction";
  if (!quantized(trace.mode)) return skipped(name, "not applicable to this mode");
  if (!trace.t1_star) return skipped(name, "zoom-in phase never reached");

  const double t1 = *trace.t1_star;
  const std::size_t k1 = index_at(trace, t1);
  const double mu_star = trace.records[k1].mu;
  const double C = trace.mode == Mode::StateQuantized
                       ? ledger.M3 * ledger.MBar * ledger.M
                       : ledger.M4 * ledger.M / ((1.0 + ledger.M0) * ledger.M5);

  const auto first_with_w = [&](std::size_t from) -> std::size_t {
    for (std::size_t k = from; k < trace.records.size(); ++k)
      if (std::isfinite(trace.records[k].w_sup)) return k;
    return trace.records.size();
  };

  RatioTracker window_end, in_window;
  int windows = 0;
  const double t_end = trace.records.back().t;
  for (int i = 1;; ++i) {
    const double start = t1 + (i - 1) * ledger.T;
    const double end = t1 + i * ledger.T;
    if (end > t_end + 0.1 * trace.dt) break;
    const double mu_i = mu_star * std::pow(ledger.Omega, i - 1);
    const std::size_t ks = first_with_w(index_at(trace, start));
    const std::size_t ke = index_at(trace, end);
    if (ks >= ke || ke >= trace.records.size() || !std::isfinite(trace.records[ke].w_sup))
      return skipped(name, "w diagnostics missing at a window boundary");
    const double start_norm = trace.records[ks].xw_norm();
    for (std::size_t k = ks; k < ke; ++k) {
      const auto& rec = trace.records[k];
      if (!std::isfinite(rec.w_sup)) continue;
      const double elapsed = rec.t - trace.records[ks].t;
      const double decay = ledger.M0 * std::exp(-ledger.delta * elapsed) * start_norm;
      in_window.add(rec.xw_norm(), std::max(decay, ledger.Omega * C * mu_i), rec.t);
    }
    window_end.add(trace.records[ke].xw_norm(), std::pow(ledger.Omega, i) * C * mu_star,
                   trace.records[ke].t);
    ++windows;
  }
  if (windows == 0) return skipped(name, "horizon shorter than one zoom-in window");

  CheckResult r;
  r.name = name;
  window_end.fill(r);
  const double end_ratio = r.max_violation_ratio;
  CheckResult inner;
  in_window.fill(inner);
  const bool ok = window_end.within(kTol) && in_window.within(kTol);
  r.status = ok ? CheckStatus::Pass : CheckStatus::Fail;
  if (inner.max_violation_ratio > r.max_violation_ratio) {
    r.max_violation_ratio = inner.max_violation_ratio;
    r.time_of_worst = inner.time_of_worst;
  }
  std::ostringstream note;
  note << "windows " << windows << "; window-end max ratio " << end_ratio
       << "; in-window max ratio " << inner.max_violation_ratio;
  r.note = note.str();
  return r;
}

CheckResult check_theorem_envelope(const SimTrace& trace, const GainLedger& ledger) {
  const std::string name = "theorem_envelope";
  if (!quantized(trace.mode)) return skipped(name, "not applicable to this mode");
  if (trace.records.empty()) return skipped(name, "empty trace");

  const double rate = ledger.decay_rate();
  const double gamma = trace.mode == Mode::StateQuantized ? ledger.gamma : ledger.gamma_bar;
  const double norm0 = trace.initial_norm();
  const double scale = gamma * std::pow(norm0, ledger.envelope_power());

  RatioTracker env;
  for (const auto& rec : trace.records) env.add(rec.norm, scale * std::exp(rate * rec.t), rec.t);

  CheckResult r;
  r.name = name;
  env.fill(r);
  const bool decaying = rate < 0.0;
  r.status =
      decaying && std::isfinite(scale) && env.within(kTol) ? CheckStatus::Pass : CheckStatus::Fail;
  std::ostringstream note;
  note << "ln(Omega)/T = " << rate << "; initial norm " << norm0
       << (norm0 < 1.0 ? " (sub-unit)" : " (super-unit)");
  r.note = note.str();
  return r;
}

CheckResult check_decay(const SimTrace& trace, const GainLedger& ledger, int windows,
                        double factor) {
  const std::string name = "decay";
  if (!quantized(trace.mode)) return skipped(name, "not applicable to this mode");
  if (!trace.t1_star) return skipped(name, "zoom-in phase never reached");

  const double target = *trace.t1_star + windows * ledger.T;
  const std::size_t k = std::min(index_at(trace, target), trace.records.size() - 1);
  const auto& rec = trace.records[k];
  const double norm0 = trace.initial_norm();

  CheckResult r;
  r.name = name;
  RatioTracker tr;
  tr.add(rec.norm, factor * norm0, rec.t);
  tr.fill(r);
  r.status = norm0 == 0.0 || rec.norm < factor * norm0 ? CheckStatus::Pass : CheckStatus::Fail;
  std::ostringstream note;
  note << "norm " << rec.norm << " at t = " << rec.t << " vs " << factor << " x initial " << norm0;
  r.note = note.str();
  return r;
}

CheckResult check_norm_equivalence(const PlantSpec& plant, const FeedbackSpec& fb, int samples,
                                   std::uint64_t seed, int grid_n, double m3_scale) {
  const double M3 = m3_scale * compute_M3(plant.L, plant.D, fb.kappa0);
  const double M4 = compute_M4(plant.L, plant.D, fb.kappa0);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0), pos(0.0, plant.D), expo(-3.0, 1.0);
  std::uniform_int_distribution<int> pieces(1, 4);

  RatioTracker upper, lower;
  long violations = 0;
  for (int s = 0; s < samples; ++s) {
    const double sx = std::pow(10.0, expo(rng)), su = std::pow(10.0, expo(rng));
    Vec X(plant.n);
    for (int i = 0; i < plant.n; ++i) X[i] = sx * unit(rng);
    std::vector<std::pair<double, double>> segs{{0.0, su * unit(rng)}};
    const int count = pieces(rng);
    for (int i = 1; i < count; ++i) segs.emplace_back(pos(rng), su * unit(rng));
    const ActuatorGrid u = ActuatorGrid::from_segments(grid_n, plant.D, segs);
    const ActuatorGrid w = backstepping_direct(plant, fb, X, u);

    const double xu = composite_norm(X, u), xw = composite_norm(X, w);
    const double tol = kTol * std::max(1.0, xu);
    const auto t = static_cast<double>(s);
    upper.add(xw, M3 * xu + tol, t);
    lower.add(M4 * xu, xw + tol, t);
    if (xw > M3 * xu + tol || M4 * xu > xw + tol) ++violations;
  }

  CheckResult r;
  r.name = m3_scale == 1.0 ? "norm_equivalence" : "norm_equivalence_scaled";
  CheckResult lo;
  upper.fill(r);
  lower.fill(lo);
  if (lo.max_violation_ratio > r.max_violation_ratio) {
    r.max_violation_ratio = lo.max_violation_ratio;
    r.time_of_worst = lo.time_of_worst;
  }
  r.status = violations == 0 ? CheckStatus::Pass : CheckStatus::Fail;
  std::ostringstream note;
  note << samples << " samples, " << violations << " violations; M3 = " << M3 << ", M4 = " << M4
       << "; worst upper ratio " << r.margins.max_ratio << ", worst lower ratio "
       << lo.margins.max_ratio;
  r.note = note.str();
  return r;
}

EnvelopeReport verify_trace(const SimTrace& trace, const GainLedger& ledger) {
  EnvelopeReport report;
  if (trace.blew_up) {
    CheckResult r;
    r.name = "finite";
    r.status = CheckStatus::Fail;
    r.note = trace.error.empty() ? "trace ended in a numerical blowup" : trace.error;
    report.checks.push_back(r);
  }
  report.checks.push_back(check_open_loop(trace, ledger));
  report.checks.push_back(check_contraction(trace, ledger));
  report.checks.push_back(check_theorem_envelope(trace, ledger));
  report.checks.push_back(check_decay(trace, ledger));
  return report;
}

}  // namespace qpl
