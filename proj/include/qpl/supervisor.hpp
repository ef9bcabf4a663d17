#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qpl/gains.hpp"
#include "qpl/model.hpp"
#include "qpl/quantizer.hpp"

namespace qpl {

enum class Phase { ZoomOut, ZoomIn };

// Which trigger the supervisor evaluates while zooming out.
enum class TriggerKind {
  QuantizedState,  // |q1mu(X)| + ||q2mu(u)||_inf <= (MBar M - Delta) mu
  ExactState,      // |X| + ||u||_inf <= (M MBar / M5) mu
};

const char* to_string(Phase phase);

// Schedule constants, fixed for a run.
struct ZoomSchedule {
  double L = 1.0;
  double tau = 1.0;
  double mu0 = 1.0;
  double T = 1.0;
  double Omega = 0.5;

  static ZoomSchedule from_ledger(const GainLedger& ledger);

  // 2 e^{2 L (j + 1) tau} mu0 on [(j - 1) tau, j tau), j = floor(t / tau) + 1.
  double zoom_out_mu(double t) const;
};

struct SupervisorState {
  Phase phase = Phase::ZoomOut;
  double mu = 0.0;
  int j = 1;  // zoom-out interval index
  int i = 0;  // zoom-in window index, 1 on [t1*, t1* + T)
  std::optional<double> t1_star;
  double mu_star = 0.0;  // mu(t1*)

  static SupervisorState initial(const ZoomSchedule& schedule);
};

// mu(t) for a state whose trigger time, if any, is already known.
double mu_at(const ZoomSchedule& schedule, const SupervisorState& s, double t);

bool trigger_state(const QuantizerSpec& q, ZoomValue mu, const Vec& X, const ActuatorGrid& u,
                   const GainLedger& ledger);
bool trigger_input(ZoomValue mu, const Vec& X, const ActuatorGrid& u, const GainLedger& ledger);

struct SupervisorEvent {
  enum class Kind { PhaseChange, MuChange };
  double t = 0.0;
  Kind kind = Kind::MuChange;
  double mu_before = 0.0;
  double mu_after = 0.0;
  Phase phase = Phase::ZoomOut;
};

const char* to_string(SupervisorEvent::Kind kind);

struct Supervisor {
  ZoomSchedule schedule;
  TriggerKind trigger = TriggerKind::QuantizedState;
  QuantizerSpec quantizer;
  GainLedger ledger;
};

// One supervisor update at time t (nondecreasing across calls). While zooming out the
// trigger is tested with the current schedule value; the first hit fixes t1* = t and
// freezes mu(t1*). Events for every mu or phase change are appended to `events`.
SupervisorState advance(const Supervisor& sup, const SupervisorState& s, double t, const Vec& X,
                        const ActuatorGrid& u, std::vector<SupervisorEvent>& events);

// Upper bound on the trigger time from the open-loop growth estimate:
// (1/L) ln(norm0 / scale), returned only when the log argument exceeds one. For state
// quantization scale = mu0 (M MBar - 2 Delta); for input quantization scale = mu0 M MBar / M5.
std::optional<double> trigger_time_bound(const GainLedger& ledger, TriggerKind kind, double norm0);

}  // namespace qpl
