#include "qpl/supervisor.hpp"

#include <cmath>

namespace qpl {

const char* to_string(Phase phase) { return phase == Phase::ZoomOut ? "zoom_out" : "zoom_in"; }

const char* to_string(SupervisorEvent::Kind kind) {
  return kind == SupervisorEvent::Kind::PhaseChange ? "phase_change" : "mu_change";
}

ZoomSchedule ZoomSchedule::from_ledger(const GainLedger& ledger) {
  return {ledger.L, ledger.tau, ledger.mu0, ledger.T, ledger.Omega};
}

double ZoomSchedule::zoom_out_mu(double t) const {
  const double j = std::floor(t / tau) + 1.0;
  return 2.0 * std::exp(2.0 * L * (j + 1.0) * tau) * mu0;
}

SupervisorState SupervisorState::initial(const ZoomSchedule& schedule) {
  SupervisorState s;
  s.mu = schedule.zoom_out_mu(0.0);
  return s;
}

double mu_at(const ZoomSchedule& schedule, const SupervisorState& s, double t) {
  if (!s.t1_star || t < *s.t1_star) return schedule.zoom_out_mu(t);
  const double windows = std::floor((t - *s.t1_star) / schedule.T);
  return s.mu_star * std::pow(schedule.Omega, windows);
}

bool trigger_state(const QuantizerSpec& q, ZoomValue mu, const Vec& X, const ActuatorGrid& u,
                   const GainLedger& ledger) {
  const QuantizedState m = quantize_state(q, mu, X, u);
  return composite_norm(m.X, m.u) <= (ledger.MBar * ledger.M - ledger.Delta) * mu.mu;
}

bool trigger_input(ZoomValue mu, const Vec& X, const ActuatorGrid& u, const GainLedger& ledger) {
  return composite_norm(X, u) <= ledger.M * ledger.MBar / ledger.M5 * mu.mu;
}

SupervisorState advance(const Supervisor& sup, const SupervisorState& s, double t, const Vec& X,
                        const ActuatorGrid& u, std::vector<SupervisorEvent>& events) {
  SupervisorState next = s;
  if (s.phase == Phase::ZoomOut) {
    next.j = static_cast<int>(std::floor(t / sup.schedule.tau)) + 1;
    next.mu = sup.schedule.zoom_out_mu(t);
    if (next.mu != s.mu)
      events.push_back({t, SupervisorEvent::Kind::MuChange, s.mu, next.mu, Phase::ZoomOut});
    const ZoomValue mu(next.mu);
    const bool fired = sup.trigger == TriggerKind::QuantizedState
                           ? trigger_state(sup.quantizer, mu, X, u, sup.ledger)
                           : trigger_input(mu, X, u, sup.ledger);
    if (fired) {
      next.phase = Phase::ZoomIn;
      next.t1_star = t;
      next.mu_star = next.mu;
      next.i = 1;
      events.push_back({t, SupervisorEvent::Kind::PhaseChange, next.mu, next.mu, Phase::ZoomIn});
    }
    return next;
  }
  const double elapsed = t - *s.t1_star;
  next.i = static_cast<int>(std::floor(elapsed / sup.schedule.T)) + 1;
  next.mu = s.mu_star * std::pow(sup.schedule.Omega, next.i - 1);
  if (next.mu != s.mu)
    events.push_back({t, SupervisorEvent::Kind::MuChange, s.mu, next.mu, Phase::ZoomIn});
  return next;
}

std::optional<double> trigger_time_bound(const GainLedger& ledger, TriggerKind kind, double norm0) {
  const double scale = kind == TriggerKind::QuantizedState
                           ? ledger.mu0 * (ledger.M * ledger.MBar - 2.0 * ledger.Delta)
                           : ledger.mu0 * ledger.M * ledger.MBar / ledger.M5;
  if (!(scale > 0.0)) return std::nullopt;
  const double arg = norm0 / scale;
  if (!(arg > 1.0)) return std::nullopt;
  return std::log(arg) / ledger.L;
}

}  // namespace qpl
