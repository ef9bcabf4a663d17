#include "qpl/sim.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "qpl/errors.hpp"
#include "qpl/predictor.hpp"
#include "qpl/rk4.hpp"

namespace qpl {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

const char* to_string(Mode mode) {
  switch (mode) {
    case Mode::StateQuantized:
      return "state_q";
    case Mode::InputQuantized:
      return "input_q";
    case Mode::Nominal:
      return "nominal";
    case Mode::OpenLoop:
      return "open_loop";
  }
  return "unknown";
}

std::optional<Mode> parse_mode(const std::string& text) {
  for (Mode m : {Mode::StateQuantized, Mode::InputQuantized, Mode::Nominal, Mode::OpenLoop})
    if (text == to_string(m)) return m;
  return std::nullopt;
}

long Scenario::steps() const { return std::lround(config.t_end / dt()); }

TriggerKind Scenario::trigger_kind() const {
  return config.mode == Mode::InputQuantized ? TriggerKind::ExactState
                                             : TriggerKind::QuantizedState;
}

double TraceRecord::xw_norm() const { return X.norm() + w_sup; }

Scenario resolve(const ScenarioConfig& config) {
  Scenario s;
  s.config = config;
  const ScenarioConfig& c = config;

  if (c.grid_n < 10) throw ConfigError("grid_n must be at least 10");
  if (!(c.t_end > 0.0)) throw ConfigError("t_end must be positive");
  if (!(c.D > 0.0)) throw ConfigError("D must be positive");
  if (c.diag_stride < 0 || c.snapshot_stride < 0) throw ConfigError("strides must be nonnegative");

  if (c.linear) {
    const auto& lin = *c.linear;
    s.entry = linear_plant(lin.A, lin.B, lin.K, c.D, lin.ges.value_or(GesCertificate{}), "linear");
    if (!lin.ges)
      s.entry.feedback.ges = estimate_ges(s.entry.plant, s.entry.feedback, 20.0, 32, c.seed);
  } else {
    auto found = find_builtin(c.plant, c.D);
    if (!found) throw ConfigError("unknown plant id '" + c.plant + "'");
    s.entry = std::move(*found);
  }
  s.entry.plant.validate();
  s.entry.feedback.validate();
  const PlantSpec& plant = s.entry.plant;
  const FeedbackSpec& fb = s.entry.feedback;

  if (c.mode == Mode::StateQuantized) validate_state_quantizer(c.quantizer, plant.n);
  if (c.mode == Mode::InputQuantized) c.quantizer.validate();
  if (!(s.dt() * plant.L < 1.0)) throw ConfigError("grid too coarse: (D/N) L must be below 1");

  DesignParams& d = s.design;
  d.lambda = c.lambda.value_or(default_lambda(plant.D, fb.ges.b3));
  if (c.eps && c.nu) {
    d.eps = *c.eps;
    d.nu = *c.nu;
  } else {
    const EpsNu found = search_eps_nu(d.lambda, plant.D, fb.ges.b3);
    d.eps = c.eps.value_or(found.eps);
    d.nu = c.nu.value_or(found.nu);
  }
  d.delta = c.delta.value_or(default_delta(fb.ges.sigma, d.nu));
  d.M = c.quantizer.M;
  d.Delta = c.quantizer.Delta;
  d.mu0 = c.mu0;
  d.tau = c.tau;
  s.ledger = compute_gains(plant, fb, d);

  if (!s.ledger.small_gain_ok) s.warnings.emplace_back("small-gain condition fails");
  if (c.mode == Mode::StateQuantized && !s.ledger.thm1_ok)
    s.warnings.emplace_back("Delta/M violates the state-quantization condition (thm1_ok = false)");
  if (c.mode == Mode::InputQuantized && !s.ledger.thm2_ok)
    s.warnings.emplace_back("Delta/M violates the input-quantization condition (thm2_ok = false)");

  std::mt19937_64 rng(c.seed);
  if (c.x0_random_scale) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vec x(plant.n);
    for (int i = 0; i < plant.n; ++i) x[i] = gauss(rng);
    s.x0 = x * (*c.x0_random_scale / x.norm());
  } else {
    if (static_cast<int>(c.x0.size()) != plant.n)
      throw ConfigError("x0 has " + std::to_string(c.x0.size()) + " entries, plant needs " +
                        std::to_string(plant.n));
    s.x0 = Eigen::Map<const Vec>(c.x0.data(), plant.n);
  }

  const ActuatorProfile& p = c.u0;
  if (!p.samples.empty()) {
    if (static_cast<int>(p.samples.size()) != c.grid_n + 1)
      throw ConfigError("u0 samples must have grid_n + 1 entries");
    s.u0 = ActuatorGrid(p.samples);
  } else if (!p.segments.empty()) {
    s.u0 = ActuatorGrid::from_segments(c.grid_n, plant.D, p.segments);
  } else if (p.random_segments > 0) {
    std::uniform_real_distribution<double> pos(0.0, plant.D), val(-p.random_scale, p.random_scale);
    std::vector<std::pair<double, double>> segs{{0.0, val(rng)}};
    for (int i = 1; i < p.random_segments; ++i) segs.emplace_back(pos(rng), val(rng));
    s.u0 = ActuatorGrid::from_segments(c.grid_n, plant.D, segs);
  } else {
    s.u0 = ActuatorGrid(std::vector<double>(static_cast<std::size_t>(c.grid_n) + 1, p.constant));
  }
  return s;
}

PlantState step(const PlantSpec& plant, double U, const PlantState& state, BoundaryHold hold) {
  const ActuatorGrid& u = state.u;
  const int cells = u.cells();
  const double h = plant.D / cells;
  const double u0 = u[0], u1 = u[1];
  const auto rhs = [&](double s, const Vec& x) -> Vec {
    const double boundary = hold == BoundaryHold::Linear ? u0 + (u1 - u0) * (s / h) : u0;
    return plant.f(x, boundary);
  };
  PlantState next{rk4_step(rhs, state.X, h), u};
  auto& values = next.u.values();
  for (int k = 0; k < cells; ++k) values[k] = u[k + 1];
  values[cells] = U;
  if (!next.X.allFinite()) throw NonFinite("plant state overflowed");
  return next;
}

SimTrace run(const Scenario& scenario) {
  const ScenarioConfig& c = scenario.config;
  const PlantSpec& plant = scenario.entry.plant;
  const FeedbackSpec& fb = scenario.entry.feedback;
  const double dt = scenario.dt();
  const long steps = scenario.steps();
  const bool quantized = c.mode == Mode::StateQuantized || c.mode == Mode::InputQuantized;

  SimTrace trace;
  trace.mode = c.mode;
  trace.n = plant.n;
  trace.grid_n = c.grid_n;
  trace.dt = dt;
  trace.records.reserve(static_cast<std::size_t>(steps) + 1);

  Supervisor sup;
  sup.schedule = ZoomSchedule::from_ledger(scenario.ledger);
  sup.trigger = scenario.trigger_kind();
  sup.quantizer = c.quantizer;
  sup.ledger = scenario.ledger;
  SupervisorState ss = SupervisorState::initial(sup.schedule);

  PlantState state{scenario.x0, scenario.u0};
  try {
    for (long k = 0; k <= steps; ++k) {
      const double t = static_cast<double>(k) * dt;
      const bool diag = c.diag_stride > 0 && k % c.diag_stride == 0;
      const bool need_exact = diag || c.mode == Mode::Nominal || c.mode == Mode::InputQuantized;

      TraceRecord rec;
      rec.t = t;
      rec.X = state.X;
      rec.u_sup = state.u.sup_norm();
      rec.norm = rec.X.norm() + rec.u_sup;
      rec.mu = kNaN;
      rec.w_sup = kNaN;
      rec.d = kNaN;

      PredictorGrid p;
      if (need_exact) p = predictor_exact(plant, state.X, state.u);
      if (diag) {
        double w = 0.0;
        for (std::size_t i = 0; i < state.u.size(); ++i)
          w = std::max(w, std::abs(state.u[i] - fb.kappa(p.values[i])));
        rec.w_sup = w;
      }

      double U = 0.0;
      switch (c.mode) {
        case Mode::OpenLoop:
          break;
        case Mode::Nominal:
          U = fb.kappa(p.at_delay());
          if (diag) rec.d = 0.0;
          break;
        case Mode::StateQuantized:
        case Mode::InputQuantized: {
          ss = advance(sup, ss, t, state.X, state.u, trace.events);
          if (ss.phase == Phase::ZoomOut) break;
          const ZoomValue mu(ss.mu);
          if (c.mode == Mode::StateQuantized) {
            U = fb.kappa(predictor_quantized(plant, c.quantizer, mu, state.X, state.u).at_delay());
            if (diag) rec.d = U - fb.kappa(p.at_delay());
          } else {
            const double nominal = fb.kappa(p.at_delay());
            U = quantize_input(c.quantizer, mu, nominal);
            if (diag) rec.d = nominal - U;
          }
          break;
        }
      }
      if (quantized) {
        rec.mu = ss.mu;
        rec.phase = ss.phase;
      }
      if (!std::isfinite(U)) throw NonFinite("control input is not finite");
      rec.U = U;
      trace.records.push_back(std::move(rec));

      if (c.snapshot_stride > 0 && k % c.snapshot_stride == 0)
        trace.snapshots.push_back({t, state.u.values()});
      if (k == steps) break;
      // U(t) is the boundary value u(D, t), so it enters the grid before the shift and
      // reaches the plant exactly D later.
      state.u[static_cast<std::size_t>(state.u.cells())] = U;
      state = step(plant, U, state, c.hold);
    }
  } catch (const NonFinite& e) {
    trace.blew_up = true;
    trace.error = e.what();
  }
  trace.t1_star = ss.t1_star;
  return trace;
}

}  // namespace qpl
