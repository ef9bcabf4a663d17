#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qpl/gains.hpp"
#include "qpl/model.hpp"
#include "qpl/quantizer.hpp"
#include "qpl/supervisor.hpp"

namespace qpl {

enum class Mode { StateQuantized, InputQuantized, Nominal, OpenLoop };

const char* to_string(Mode mode);
std::optional<Mode> parse_mode(const std::string& text);

// How u(0, t) is held across one RK4 step.
enum class BoundaryHold { Linear, ZeroOrder };

// Inline linear plant dX/dt = A X + B u with kappa(X) = -K X.
struct LinearPlantConfig {
  Mat A;
  Vec B;
  Vec K;
  std::optional<GesCertificate> ges;  // estimated numerically when absent
};

// Initial actuator profile. Exactly one representation is used, in this order of precedence:
// explicit samples (must have N + 1 entries), segments, random segments, constant.
struct ActuatorProfile {
  std::vector<double> samples;
  std::vector<std::pair<double, double>> segments;
  int random_segments = 0;
  double random_scale = 0.0;
  double constant = 0.0;
};

struct ScenarioConfig {
  std::string plant = "sine_scalar";
  std::optional<LinearPlantConfig> linear;
  double D = 1.0;
  QuantizerSpec quantizer{10.0, 5e-5, 1e-5, 0.25, QuantizerKind::Ramped};
  // Unset entries get defaults: lambda from the small-gain condition with a 20% margin,
  // (eps, nu) from the grid search, delta at the midpoint of (0, min{sigma, nu}).
  std::optional<double> lambda, eps, nu, delta;
  double mu0 = 1.0;
  double tau = 0.5;
  int grid_n = 100;
  double t_end = 50.0;
  std::vector<double> x0{1.0};
  std::optional<double> x0_random_scale;  // random direction with this norm, from seed
  ActuatorProfile u0;
  Mode mode = Mode::StateQuantized;
  std::uint64_t seed = 1;
  BoundaryHold hold = BoundaryHold::Linear;
  int snapshot_stride = 0;  // 0 disables actuator snapshots
  int diag_stride = 1;      // w and d diagnostics every k steps, 0 disables
};

// A config resolved against the plant catalog, with its gain ledger.
struct Scenario {
  ScenarioConfig config;
  PlantEntry entry;
  DesignParams design;
  GainLedger ledger;
  Vec x0;
  ActuatorGrid u0;
  std::vector<std::string> warnings;

  double dt() const { return entry.plant.D / config.grid_n; }
  long steps() const;
  TriggerKind trigger_kind() const;
};

// Throws ConfigError / InvalidDelta / Infeasible on inconsistent input.
Scenario resolve(const ScenarioConfig& config);

struct PlantState {
  Vec X;
  ActuatorGrid u;
};

// One step of length D/N: exact one-cell shift of the transport state toward x = 0 with
// u(D) = U afterwards, and RK4 for dX/dt = f(X, u(0, t)).
PlantState step(const PlantSpec& plant, double U, const PlantState& state,
                BoundaryHold hold = BoundaryHold::Linear);

struct TraceRecord {
  double t = 0.0;
  Vec X;
  double u_sup = 0.0;
  double U = 0.0;
  double mu = 0.0;             // NaN outside the quantized modes
  std::optional<Phase> phase;  // empty outside the quantized modes
  double norm = 0.0;
  double w_sup = 0.0;  // NaN when not computed at this step
  double d = 0.0;      // d (state mode) or dbar (input mode); NaN when not applicable

  double xw_norm() const;  // |X| + ||w||_inf
};

struct Snapshot {
  double t = 0.0;
  std::vector<double> u;
};

struct SimTrace {
  Mode mode = Mode::Nominal;
  int n = 1;
  int grid_n = 0;
  double dt = 0.0;
  std::vector<TraceRecord> records;
  std::vector<SupervisorEvent> events;
  std::vector<Snapshot> snapshots;
  std::optional<double> t1_star;
  bool blew_up = false;
  std::string error;

  double initial_norm() const { return records.empty() ? 0.0 : records.front().norm; }
};

// Runs the supervisor, controller and plant loop. A numerical blowup stops the run and is
// reported through blew_up/error with the records collected so far.
SimTrace run(const Scenario& scenario);

}  // namespace qpl
