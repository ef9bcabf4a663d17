#include "qpl/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <iomanip>
#include <limits>
#include <ostream>
#include <thread>

#include "qpl/errors.hpp"
#include "qpl/verify.hpp"

namespace qpl::cli {

namespace fs = std::filesystem;
using io::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

int exit_code_for(const Error& e) {
  if (dynamic_cast<const NonFinite*>(&e)) return kBlowUp;
  if (dynamic_cast<const Infeasible*>(&e) || dynamic_cast<const NotContracting*>(&e))
    return kConditionFailed;
  return kUsage;
}

const char* error_kind(const Error& e) {
  if (dynamic_cast<const GridTooCoarse*>(&e)) return "GridTooCoarse";
  if (dynamic_cast<const NonFinite*>(&e)) return "NonFinite";
  if (dynamic_cast<const InvalidDelta*>(&e)) return "InvalidDelta";
  if (dynamic_cast<const Infeasible*>(&e)) return "Infeasible";
  if (dynamic_cast<const NotContracting*>(&e)) return "NotContracting";
  if (dynamic_cast<const ConfigError*>(&e)) return "ConfigError";
  return "Error";
}

struct Overrides {
  std::string mode;
  std::optional<int> grid_n;
  std::optional<std::uint64_t> seed;

  void apply(ScenarioConfig& c) const {
    if (!mode.empty()) {
      const auto m = parse_mode(mode);
      if (!m) throw ConfigError("unknown mode '" + mode + "'");
      c.mode = *m;
    }
    if (grid_n) c.grid_n = *grid_n;
    if (seed) c.seed = *seed;
  }
};

void print_flag(std::ostream& out, const char* name, bool ok, double margin) {
  out << "  " << std::left << std::setw(22) << name << std::setw(6) << (ok ? "ok" : "FAIL")
      << "margin " << io::format_double(margin) << "\n";
}

void print_ledger(std::ostream& out, const GainLedger& g) {
  out << "constants\n";
  const std::pair<const char*, double> values[] = {{"M3", g.M3},
                                                   {"M4", g.M4},
                                                   {"M5", g.M5},
                                                   {"MBar", g.MBar},
                                                   {"phi", g.phi},
                                                   {"phi1", g.phi1},
                                                   {"M0", g.M0},
                                                   {"Omega", g.Omega},
                                                   {"T", g.T},
                                                   {"gamma", g.gamma},
                                                   {"gamma_bar", g.gamma_bar}};
  for (const auto& [k, v] : values)
    out << "  " << std::left << std::setw(22) << k << io::format_double(v) << "\n";
  const double ratio = g.Delta / g.M;
  out << "conditions (Delta/M = " << io::format_double(ratio) << ")\n";
  print_flag(out, "small_gain_ok", g.small_gain_ok, g.small_gain_margin);
  print_flag(out, "phi_ok", g.phi_ok, g.phi_margin);
  print_flag(out, "phi1_ok", g.phi1_ok, g.phi1_margin);
  print_flag(out, "positive_log_arg_ok", g.positive_log_arg_ok, g.log_arg_margin);
  print_flag(out, "thm1_ok", g.thm1_ok, g.thm1_threshold - ratio);
  print_flag(out, "thm2_ok", g.thm2_ok, g.thm2_threshold - ratio);
}

void print_report(std::ostream& out, const EnvelopeReport& report) {
  for (const auto& c : report.checks) {
    out << "  " << std::left << std::setw(18) << c.name << std::setw(9) << to_string(c.status)
        << "max ratio " << io::format_double(c.max_violation_ratio) << "  " << c.note << "\n";
  }
  out << "overall " << (report.overall() ? "pass" : "fail") << "\n";
}

json json_or_null(const std::optional<double>& v) {
  if (v) return *v;
  return nullptr;
}

// Resolves a scenario, turning library errors into an exit code and a message.
std::optional<Scenario> resolve_or_report(const ScenarioConfig& c, std::ostream& err, int& code) {
  try {
    return resolve(c);
  } catch (const Error& e) {
    err << "error: " << error_kind(e) << ": " << e.what() << "\n";
    code = exit_code_for(e);
    return std::nullopt;
  }
}

int cmd_gains(const std::string& config_path, const fs::path& out_dir, const Overrides& ov,
              std::ostream& out, std::ostream& err) {
  ScenarioConfig c = io::load_config(config_path);
  ov.apply(c);
  int code = kOk;
  const auto s = resolve_or_report(c, err, code);
  if (!s) return code;
  io::write_atomic(out_dir / "ledger.json", io::to_json(s->ledger).dump(2) + "\n");
  out << "plant " << s->entry.id << ", mode " << to_string(c.mode) << "\n";
  print_ledger(out, s->ledger);
  return ledger_exit_code(s->ledger, c.mode);
}

int cmd_simulate(const std::string& config_path, const fs::path& out_dir, const Overrides& ov,
                 std::ostream& out, std::ostream& err) {
  ScenarioConfig c = io::load_config(config_path);
  ov.apply(c);
  int code = kOk;
  const auto s = resolve_or_report(c, err, code);
  if (!s) return code;
  for (const auto& w : s->warnings) err << "warning: " << w << "\n";
  const SimTrace trace = run(*s);
  write_run(*s, trace, out_dir, config_path);
  out << "wrote " << trace.records.size() << " records to " << (out_dir / "trace.csv").string()
      << "\n";
  if (trace.t1_star) out << "t1* = " << io::format_double(*trace.t1_star) << "\n";
  if (trace.blew_up) {
    err << "error: NonFinite: " << trace.error << " (partial trace written)\n";
    return kBlowUp;
  }
  return kOk;
}

struct LoadedRun {
  json manifest;
  ScenarioConfig config;
  GainLedger ledger;
  SimTrace trace;
};

LoadedRun load_run(const fs::path& dir) {
  for (const char* name : {"manifest.json", "ledger.json", "trace.csv"})
    if (!fs::exists(dir / name)) throw ConfigError("missing " + (dir / name).string());
  LoadedRun r;
  try {
    r.manifest = json::parse(io::read_file(dir / "manifest.json"));
    r.ledger = io::ledger_from_json(json::parse(io::read_file(dir / "ledger.json")));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("unreadable run metadata: ") + e.what());
  }
  r.config = io::config_from_json(r.manifest);
  const std::string text = io::read_file(dir / "trace.csv");
  const json& artifacts = r.manifest.value("artifacts", json::object());
  if (artifacts.contains("trace.csv") &&
      artifacts["trace.csv"].get<std::string>() != io::sha256_hex(text))
    throw ConfigError("trace.csv does not match the manifest hash (truncated or edited)");
  const json& info = r.manifest.at("run");
  r.trace = io::parse_trace_csv(text, r.config.mode, info.at("dt").get<double>(),
                                info.at("grid_n").get<int>());
  r.trace.blew_up = info.value("blew_up", false);
  r.trace.error = info.value("error", std::string());
  const long expected = info.value("records", static_cast<long>(r.trace.records.size()));
  if (static_cast<long>(r.trace.records.size()) != expected)
    throw ConfigError("trace.csv has " + std::to_string(r.trace.records.size()) +
                      " records, manifest lists " + std::to_string(expected));
  return r;
}

int cmd_verify(const fs::path& dir, bool refine, std::ostream& out, std::ostream& err) {
  LoadedRun loaded;
  try {
    loaded = load_run(dir);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const json::exception& e) {
    err << "error: malformed manifest: " << e.what() << "\n";
    return kUsage;
  }
  const EnvelopeReport report = verify_trace(loaded.trace, loaded.ledger);
  io::write_atomic(dir / "report.json", io::to_json(report).dump(2) + "\n");
  out << "verify " << dir.string() << " (N = " << loaded.trace.grid_n << ")\n";
  print_report(out, report);
  if (!refine) return report.overall() ? kOk : kConditionFailed;

  ScenarioConfig c = loaded.config;
  c.grid_n *= 2;
  int code = kOk;
  const auto s = resolve_or_report(c, err, code);
  if (!s) return code;
  const SimTrace trace = run(*s);
  const fs::path refined = dir / "refined";
  write_run(*s, trace, refined, (dir / "manifest.json").string());
  const EnvelopeReport fine = verify_trace(trace, s->ledger);
  io::write_atomic(refined / "report.json", io::to_json(fine).dump(2) + "\n");
  out << "refined (N = " << c.grid_n << ")\n";
  print_report(out, fine);
  if (!report.overall() && fine.overall()) out << "violations vanish at 2N\n";
  return report.overall() || fine.overall() ? kOk : kConditionFailed;
}

int cmd_sweep(const std::string& config_path, const fs::path& out_dir, const Overrides& ov,
              std::ostream& out) {
  const json doc = io::parse_document(config_path);
  ScenarioConfig base = io::config_from_json(doc);
  ov.apply(base);
  const auto points = sweep_points(doc);
  const auto rows = run_sweep(base, points);
  io::write_atomic(out_dir / "sweep.csv", sweep_csv(rows));
  long ok = 0;
  for (const auto& r : rows) ok += r.status == "ok" ? 1 : 0;
  out << rows.size() << " runs, " << ok << " completed; wrote " << (out_dir / "sweep.csv").string()
      << "\n";
  return kOk;
}

unsigned worker_count(std::size_t jobs) {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("QPL_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) n = static_cast<unsigned>(v);
  }
  return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(jobs, 1)));
}

std::string opt_text(const std::optional<double>& v) { return v ? io::format_double(*v) : ""; }

}  // namespace

int ledger_exit_code(const GainLedger& g, Mode mode) {
  bool ok = g.small_gain_ok && g.phi_ok && g.phi1_ok && g.positive_log_arg_ok;
  if (mode == Mode::StateQuantized) ok = ok && g.thm1_ok;
  if (mode == Mode::InputQuantized) ok = ok && g.thm2_ok;
  return ok ? kOk : kConditionFailed;
}

ScenarioConfig resolved_config(const Scenario& s) {
  ScenarioConfig c = s.config;
  c.lambda = s.design.lambda;
  c.eps = s.design.eps;
  c.nu = s.design.nu;
  c.delta = s.design.delta;
  if (c.linear && !c.linear->ges) c.linear->ges = s.entry.feedback.ges;
  return c;
}

json write_run(const Scenario& s, const SimTrace& trace, const fs::path& out,
               const std::string& config_path) {
  const std::pair<const char*, std::string> files[] = {
      {"trace.csv", io::trace_csv(trace)},
      {"snapshots.csv", io::snapshots_csv(trace)},
      {"events.json", io::to_json(trace.events).dump(2) + "\n"},
      {"ledger.json", io::to_json(s.ledger).dump(2) + "\n"}};
  json artifacts = json::object();
  for (const auto& [name, content] : files) {
    io::write_atomic(out / name, content);
    artifacts[name] = io::sha256_hex(content);
  }
  json manifest;
  manifest["manifest_version"] = 1;
  manifest["tool"] = "qpl";
  manifest["tool_version"] = kToolVersion;
  manifest["timestamp"] = utc_timestamp();
  manifest["config_path"] = config_path;
  manifest["out_dir"] = out.string();
  manifest["config"] = io::to_json(resolved_config(s));
  manifest["run"] = {{"mode", to_string(trace.mode)},   {"n", trace.n},
                     {"grid_n", trace.grid_n},          {"dt", trace.dt},
                     {"records", trace.records.size()}, {"t1_star", json_or_null(trace.t1_star)},
                     {"blew_up", trace.blew_up},        {"error", trace.error}};
  manifest["warnings"] = s.warnings;
  manifest["artifacts"] = artifacts;
  io::write_atomic(out / "manifest.json", manifest.dump(2) + "\n");
  return manifest;
}

std::vector<SweepPoint> sweep_points(const json& doc) {
  const json grid = doc.value("sweep", json::object());
  if (!grid.is_object()) throw ConfigError("sweep must be a table");
  for (const auto& [k, v] : grid.items()) {
    static const char* known[] = {"Delta", "M", "mu0", "tau", "lambda", "grid_n", "x0_scale"};
    if (std::find_if(std::begin(known), std::end(known), [&](const char* n) { return k == n; }) ==
        std::end(known))
      throw ConfigError("unknown sweep axis '" + k + "'");
    if (!v.is_array()) throw ConfigError("sweep axis '" + k + "' must be a list");
  }
  std::vector<SweepPoint> points;
  if (grid.empty()) return points;
  points.emplace_back();
  const auto expand = [&](const char* key, auto setter) {
    if (!grid.contains(key)) return;
    std::vector<SweepPoint> next;
    for (const auto& p : points)
      for (const auto& v : grid.at(key)) {
        SweepPoint q = p;
        setter(q, v);
        next.push_back(q);
      }
    points = std::move(next);
  };
  try {
    expand("Delta", [](SweepPoint& p, const json& v) { p.Delta = v.get<double>(); });
    expand("M", [](SweepPoint& p, const json& v) { p.M = v.get<double>(); });
    expand("mu0", [](SweepPoint& p, const json& v) { p.mu0 = v.get<double>(); });
    expand("tau", [](SweepPoint& p, const json& v) { p.tau = v.get<double>(); });
    expand("lambda", [](SweepPoint& p, const json& v) { p.lambda = v.get<double>(); });
    expand("grid_n", [](SweepPoint& p, const json& v) { p.grid_n = v.get<int>(); });
    expand("x0_scale", [](SweepPoint& p, const json& v) { p.x0_scale = v.get<double>(); });
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed sweep value: ") + e.what());
  }
  return points;
}

ScenarioConfig apply(const ScenarioConfig& base, const SweepPoint& p) {
  ScenarioConfig c = base;
  if (p.Delta) c.quantizer.Delta = *p.Delta;
  if (p.M) c.quantizer.M = *p.M;
  if (p.mu0) c.mu0 = *p.mu0;
  if (p.tau) c.tau = *p.tau;
  if (p.lambda) c.lambda = *p.lambda;
  if (p.grid_n) c.grid_n = *p.grid_n;
  if (p.x0_scale) {
    if (c.x0_random_scale)
      c.x0_random_scale = *p.x0_scale;
    else
      for (double& x : c.x0) x *= *p.x0_scale;
  }
  return c;
}

SweepRow sweep_one(const ScenarioConfig& base, const SweepPoint& point) {
  SweepRow row;
  row.point = point;
  row.Omega = row.T = row.t1_star = row.windows_to_convergence = kNaN;
  row.max_envelope_ratio = row.initial_norm = row.final_norm = kNaN;
  try {
    const Scenario s = resolve(apply(base, point));
    row.Omega = s.ledger.Omega;
    row.T = s.ledger.T;
    row.condition_ok = ledger_exit_code(s.ledger, s.config.mode) == kOk;
    const SimTrace trace = run(s);
    row.status = trace.blew_up ? "blowup" : "ok";
    row.error = trace.error;
    if (trace.records.empty()) return row;
    row.initial_norm = trace.initial_norm();
    row.final_norm = trace.records.back().norm;
    const double start = trace.t1_star.value_or(0.0);
    if (trace.t1_star) row.t1_star = *trace.t1_star;
    for (const auto& rec : trace.records)
      if (rec.t >= start && rec.norm < 1e-3 * row.initial_norm) {
        row.windows_to_convergence = std::ceil((rec.t - start) / s.ledger.T);
        break;
      }
    row.max_envelope_ratio = check_theorem_envelope(trace, s.ledger).max_violation_ratio;
  } catch (const Error& e) {
    row.status = "error";
    row.error = std::string(error_kind(e)) + ": " + e.what();
  }
  return row;
}

std::vector<SweepRow> run_sweep(const ScenarioConfig& base, const std::vector<SweepPoint>& points) {
  std::vector<SweepRow> rows(points.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < points.size(); i = next++)
      rows[i] = sweep_one(base, points[i]);
  };
  std::vector<std::thread> pool;
  const unsigned n = worker_count(points.size());
  for (unsigned i = 1; i < n; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out =
      "run,Delta,M,mu0,tau,lambda,grid_n,x0_scale,status,condition_ok,Omega,T,t1_star,"
      "windows_to_convergence,max_envelope_ratio,initial_norm,final_norm,error\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const SweepRow& r = rows[i];
    const SweepPoint& p = r.point;
    std::string error = r.error;
    std::replace(error.begin(), error.end(), ',', ';');
    std::replace(error.begin(), error.end(), '\n', ' ');
    out += std::to_string(i) + "," + opt_text(p.Delta) + "," + opt_text(p.M) + "," +
           opt_text(p.mu0) + "," + opt_text(p.tau) + "," + opt_text(p.lambda) + "," +
           (p.grid_n ? std::to_string(*p.grid_n) : "") + "," + opt_text(p.x0_scale) + "," +
           r.status + "," + (r.condition_ok ? "true" : "false") + "," + io::format_double(r.Omega) +
           "," + io::format_double(r.T) + "," + io::format_double(r.t1_star) + "," +
           io::format_double(r.windows_to_convergence) + "," +
           io::format_double(r.max_envelope_ratio) + "," + io::format_double(r.initial_norm) + "," +
           io::format_double(r.final_norm) + "," + error + "\n";
  }
  return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Quantized predictor feedback: gains, simulation, verification and sweeps", "qpl"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  std::string config_path, out_dir = "out";
  std::string verify_dir;
  bool refine = false;
  Overrides ov;

  const auto add_common = [&](CLI::App* sub, bool with_overrides) {
    sub->add_option("--config", config_path, "Scenario config (.json, .toml or a manifest)")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "Output directory");
    sub->add_option("--mode", ov.mode, "state_q, input_q, nominal or open_loop");
    if (with_overrides) {
      sub->add_option("--grid-n", ov.grid_n, "Actuator grid cells N")->check(CLI::PositiveNumber);
      sub->add_option("--seed", ov.seed, "Random seed");
    }
  };
  auto* gains = app.add_subcommand("gains", "Compute the gain ledger and check the conditions");
  add_common(gains, false);
  auto* simulate = app.add_subcommand("simulate", "Run one scenario and write its trace");
  add_common(simulate, true);
  auto* sweep = app.add_subcommand("sweep", "Run the cross product of a parameter grid");
  add_common(sweep, true);
  auto* verify = app.add_subcommand("verify", "Check a simulated trace against its envelopes");
  verify->add_option("dir", verify_dir, "Run directory written by simulate");
  verify->add_option("--out", verify_dir, "Run directory written by simulate");
  verify->add_flag("--refine", refine, "Also rerun at 2N and verify the refined trace");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*gains) return cmd_gains(config_path, out_dir, ov, out, err);
    if (*simulate) return cmd_simulate(config_path, out_dir, ov, out, err);
    if (*sweep) return cmd_sweep(config_path, out_dir, ov, out);
    if (verify_dir.empty()) {
      err << "error: verify needs a run directory\n";
      return kUsage;
    }
    return cmd_verify(verify_dir, refine, out, err);
  } catch (const Error& e) {
    err << "error: " << error_kind(e) << ": " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
}

}  // namespace qpl::cli
