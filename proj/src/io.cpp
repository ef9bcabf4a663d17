#include "qpl/io.hpp"

#include <openssl/evp.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <toml.hpp>

#include "qpl/errors.hpp"

namespace qpl::io {

namespace fs = std::filesystem;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 32> buf{};
  std::snprintf(buf.data(), buf.size(), "%.17g", v);
  return buf.data();
}

void write_atomic(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string sha256_hex(std::string_view content) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(content.data(), content.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1)
    throw Error("sha256 digest failed");
  std::ostringstream out;
  out << std::hex << std::setfill('0');
  for (unsigned int i = 0; i < len; ++i) out << std::setw(2) << static_cast<int>(digest[i]);
  return out.str();
}

namespace {

double num(const json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  return j.get<double>();
}

json num_json(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

}  // namespace

json to_json(const GainLedger& g) {
  json j;
  const std::pair<const char*, double> values[] = {{"L", g.L},
                                                   {"D", g.D},
                                                   {"kappa0", g.kappa0},
                                                   {"M_sigma", g.M_sigma},
                                                   {"sigma", g.sigma},
                                                   {"b3", g.b3},
                                                   {"lambda", g.lambda},
                                                   {"eps", g.eps},
                                                   {"nu", g.nu},
                                                   {"delta", g.delta},
                                                   {"M", g.M},
                                                   {"Delta", g.Delta},
                                                   {"mu0", g.mu0},
                                                   {"tau", g.tau},
                                                   {"M3", g.M3},
                                                   {"M4", g.M4},
                                                   {"M5", g.M5},
                                                   {"MBar", g.MBar},
                                                   {"phi", g.phi},
                                                   {"phi1", g.phi1},
                                                   {"M0", g.M0},
                                                   {"Omega", g.Omega},
                                                   {"T", g.T},
                                                   {"gamma", g.gamma},
                                                   {"gamma_bar", g.gamma_bar},
                                                   {"small_gain_margin", g.small_gain_margin},
                                                   {"phi_margin", g.phi_margin},
                                                   {"phi1_margin", g.phi1_margin},
                                                   {"thm1_threshold", g.thm1_threshold},
                                                   {"thm2_threshold", g.thm2_threshold},
                                                   {"log_arg_margin", g.log_arg_margin}};
  for (const auto& [k, v] : values) j[k] = num_json(v);
  j["small_gain_ok"] = g.small_gain_ok;
  j["phi_ok"] = g.phi_ok;
  j["phi1_ok"] = g.phi1_ok;
  j["thm1_ok"] = g.thm1_ok;
  j["thm2_ok"] = g.thm2_ok;
  j["positive_log_arg_ok"] = g.positive_log_arg_ok;
  return j;
}

GainLedger ledger_from_json(const json& j) {
  GainLedger g;
  try {
    const std::pair<const char*, double*> values[] = {{"L", &g.L},
                                                      {"D", &g.D},
                                                      {"kappa0", &g.kappa0},
                                                      {"M_sigma", &g.M_sigma},
                                                      {"sigma", &g.sigma},
                                                      {"b3", &g.b3},
                                                      {"lambda", &g.lambda},
                                                      {"eps", &g.eps},
                                                      {"nu", &g.nu},
                                                      {"delta", &g.delta},
                                                      {"M", &g.M},
                                                      {"Delta", &g.Delta},
                                                      {"mu0", &g.mu0},
                                                      {"tau", &g.tau},
                                                      {"M3", &g.M3},
                                                      {"M4", &g.M4},
                                                      {"M5", &g.M5},
                                                      {"MBar", &g.MBar},
                                                      {"phi", &g.phi},
                                                      {"phi1", &g.phi1},
                                                      {"M0", &g.M0},
                                                      {"Omega", &g.Omega},
                                                      {"T", &g.T},
                                                      {"gamma", &g.gamma},
                                                      {"gamma_bar", &g.gamma_bar},
                                                      {"small_gain_margin", &g.small_gain_margin},
                                                      {"phi_margin", &g.phi_margin},
                                                      {"phi1_margin", &g.phi1_margin},
                                                      {"thm1_threshold", &g.thm1_threshold},
                                                      {"thm2_threshold", &g.thm2_threshold},
                                                      {"log_arg_margin", &g.log_arg_margin}};
    for (const auto& [k, p] : values) *p = num(j.at(k));
    g.small_gain_ok = j.at("small_gain_ok").get<bool>();
    g.phi_ok = j.at("phi_ok").get<bool>();
    g.phi1_ok = j.at("phi1_ok").get<bool>();
    g.thm1_ok = j.at("thm1_ok").get<bool>();
    g.thm2_ok = j.at("thm2_ok").get<bool>();
    g.positive_log_arg_ok = j.at("positive_log_arg_ok").get<bool>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed ledger: ") + e.what());
  }
  return g;
}

json to_json(const EnvelopeReport& report) {
  json checks = json::array();
  for (const auto& c : report.checks) {
    checks.push_back({{"name", c.name},
                      {"status", to_string(c.status)},
                      {"holds", c.holds()},
                      {"max_violation_ratio", num_json(c.max_violation_ratio)},
                      {"time_of_worst", num_json(c.time_of_worst)},
                      {"margin_stats",
                       {{"count", c.margins.count},
                        {"min_ratio", num_json(c.margins.min_ratio)},
                        {"mean_ratio", num_json(c.margins.mean_ratio)},
                        {"max_ratio", num_json(c.margins.max_ratio)}}},
                      {"note", c.note}});
  }
  return {{"overall", report.overall()}, {"checks", checks}};
}

json to_json(const std::vector<SupervisorEvent>& events) {
  json out = json::array();
  for (const auto& e : events) {
    out.push_back({{"t", e.t},
                   {"kind", to_string(e.kind)},
                   {"mu_before", e.mu_before},
                   {"mu_after", e.mu_after},
                   {"phase", to_string(e.phase)}});
  }
  return out;
}

namespace {

json toml_to_json(const toml::node& node) {
  if (const auto* t = node.as_table()) {
    json j = json::object();
    for (const auto& [k, v] : *t) j[std::string(k.str())] = toml_to_json(v);
    return j;
  }
  if (const auto* a = node.as_array()) {
    json j = json::array();
    for (const auto& v : *a) j.push_back(toml_to_json(v));
    return j;
  }
  if (const auto* v = node.as_floating_point()) return v->get();
  if (const auto* v = node.as_integer()) return v->get();
  if (const auto* v = node.as_boolean()) return v->get();
  if (const auto* v = node.as_string()) return v->get();
  throw ConfigError("unsupported TOML value type");
}

std::vector<double> vec_of(const json& j, const char* what) {
  if (!j.is_array()) throw ConfigError(std::string(what) + " must be an array");
  return j.get<std::vector<double>>();
}

Vec eigen_vec(const json& j, const char* what) {
  const auto v = vec_of(j, what);
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

GesCertificate ges_of(const json& j) {
  return {j.at("M_sigma").get<double>(), j.at("sigma").get<double>(), j.at("b3").get<double>()};
}

QuantizerKind kind_of(const std::string& s) {
  if (s == "ramped") return QuantizerKind::Ramped;
  if (s == "staircase") return QuantizerKind::Staircase;
  if (s == "identity") return QuantizerKind::Identity;
  throw ConfigError("unknown quantizer kind '" + s + "'");
}

const char* kind_name(QuantizerKind k) {
  switch (k) {
    case QuantizerKind::Ramped:
      return "ramped";
    case QuantizerKind::Staircase:
      return "staircase";
    case QuantizerKind::Identity:
      return "identity";
  }
  return "ramped";
}

void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const char* where) {
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    if (!ok) throw ConfigError(std::string("unknown key '") + k + "' in " + where);
  }
}

}  // namespace

ScenarioConfig config_from_json(const json& doc) {
  const json& j = doc.contains("manifest_version") ? doc.at("config") : doc;
  if (!j.is_object()) throw ConfigError("config must be an object");
  reject_unknown(j,
                 {"plant", "D", "quantizer", "design", "grid_n", "t_end", "x0", "x0_random_scale",
                  "u0", "mode", "seed", "hold", "snapshot_stride", "diag_stride", "sweep"},
                 "config");
  ScenarioConfig c;
  try {
    if (j.contains("plant")) {
      const json& p = j.at("plant");
      if (p.is_string()) {
        c.plant = p.get<std::string>();
      } else {
        if (p.value("type", std::string("linear")) != "linear")
          throw ConfigError("inline plants must have type 'linear'");
        LinearPlantConfig lin;
        const auto rows = p.at("A").get<std::vector<std::vector<double>>>();
        const auto n = static_cast<Eigen::Index>(rows.size());
        lin.A.resize(n, n);
        for (Eigen::Index r = 0; r < n; ++r) {
          if (static_cast<Eigen::Index>(rows[r].size()) != n) throw ConfigError("A must be square");
          for (Eigen::Index k = 0; k < n; ++k) lin.A(r, k) = rows[r][k];
        }
        lin.B = eigen_vec(p.at("B"), "B");
        lin.K = eigen_vec(p.at("K"), "K");
        if (p.contains("ges")) lin.ges = ges_of(p.at("ges"));
        c.plant = "linear";
        c.linear = std::move(lin);
      }
    }
    c.D = j.value("D", c.D);
    if (j.contains("quantizer")) {
      const json& q = j.at("quantizer");
      reject_unknown(q, {"M", "Delta", "M_hat", "rho", "kind"}, "quantizer");
      c.quantizer.M = q.value("M", c.quantizer.M);
      c.quantizer.Delta = q.value("Delta", c.quantizer.Delta);
      c.quantizer.M_hat = q.value("M_hat", c.quantizer.M_hat);
      c.quantizer.rho = q.value("rho", c.quantizer.rho);
      if (q.contains("kind")) c.quantizer.kind = kind_of(q.at("kind").get<std::string>());
    }
    if (j.contains("design")) {
      const json& d = j.at("design");
      reject_unknown(d, {"lambda", "eps", "nu", "delta", "mu0", "tau"}, "design");
      if (d.contains("lambda")) c.lambda = d.at("lambda").get<double>();
      if (d.contains("eps")) c.eps = d.at("eps").get<double>();
      if (d.contains("nu")) c.nu = d.at("nu").get<double>();
      if (d.contains("delta")) c.delta = d.at("delta").get<double>();
      c.mu0 = d.value("mu0", c.mu0);
      c.tau = d.value("tau", c.tau);
    }
    c.grid_n = j.value("grid_n", c.grid_n);
    c.t_end = j.value("t_end", c.t_end);
    if (j.contains("x0")) c.x0 = vec_of(j.at("x0"), "x0");
    if (j.contains("x0_random_scale")) c.x0_random_scale = j.at("x0_random_scale").get<double>();
    if (j.contains("u0")) {
      const json& u = j.at("u0");
      reject_unknown(u, {"samples", "segments", "random_segments", "random_scale", "constant"},
                     "u0");
      if (u.contains("samples")) c.u0.samples = vec_of(u.at("samples"), "u0.samples");
      if (u.contains("segments"))
        for (const auto& seg : u.at("segments")) {
          const auto pair = seg.get<std::vector<double>>();
          if (pair.size() != 2) throw ConfigError("u0 segments are [x_start, value] pairs");
          c.u0.segments.emplace_back(pair[0], pair[1]);
        }
      c.u0.random_segments = u.value("random_segments", 0);
      c.u0.random_scale = u.value("random_scale", 0.0);
      c.u0.constant = u.value("constant", 0.0);
    }
    if (j.contains("mode")) {
      const auto m = parse_mode(j.at("mode").get<std::string>());
      if (!m) throw ConfigError("unknown mode '" + j.at("mode").get<std::string>() + "'");
      c.mode = *m;
    }
    c.seed = j.value("seed", c.seed);
    if (j.contains("hold")) {
      const auto h = j.at("hold").get<std::string>();
      if (h == "linear")
        c.hold = BoundaryHold::Linear;
      else if (h == "zoh")
        c.hold = BoundaryHold::ZeroOrder;
      else
        throw ConfigError("hold must be 'linear' or 'zoh'");
    }
    c.snapshot_stride = j.value("snapshot_stride", c.snapshot_stride);
    c.diag_stride = j.value("diag_stride", c.diag_stride);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  return c;
}

json parse_document(const fs::path& path) {
  const std::string text = read_file(path);
  if (path.extension() == ".toml") {
    try {
      return toml_to_json(toml::parse(text, path.string()));
    } catch (const toml::parse_error& e) {
      throw ConfigError(std::string("TOML parse error: ") + std::string(e.description()));
    }
  }
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("JSON parse error: ") + e.what());
  }
}

ScenarioConfig load_config(const fs::path& path) { return config_from_json(parse_document(path)); }

json to_json(const ScenarioConfig& c) {
  json j;
  if (c.linear) {
    json A = json::array();
    for (Eigen::Index r = 0; r < c.linear->A.rows(); ++r) {
      json row = json::array();
      for (Eigen::Index k = 0; k < c.linear->A.cols(); ++k) row.push_back(c.linear->A(r, k));
      A.push_back(row);
    }
    json p = {
        {"type", "linear"},
        {"A", A},
        {"B", std::vector<double>(c.linear->B.data(), c.linear->B.data() + c.linear->B.size())},
        {"K", std::vector<double>(c.linear->K.data(), c.linear->K.data() + c.linear->K.size())}};
    if (c.linear->ges)
      p["ges"] = {{"M_sigma", c.linear->ges->M_sigma},
                  {"sigma", c.linear->ges->sigma},
                  {"b3", c.linear->ges->b3}};
    j["plant"] = p;
  } else {
    j["plant"] = c.plant;
  }
  j["D"] = c.D;
  j["quantizer"] = {{"M", c.quantizer.M},
                    {"Delta", c.quantizer.Delta},
                    {"M_hat", c.quantizer.M_hat},
                    {"rho", c.quantizer.rho},
                    {"kind", kind_name(c.quantizer.kind)}};
  json d = {{"mu0", c.mu0}, {"tau", c.tau}};
  if (c.lambda) d["lambda"] = *c.lambda;
  if (c.eps) d["eps"] = *c.eps;
  if (c.nu) d["nu"] = *c.nu;
  if (c.delta) d["delta"] = *c.delta;
  j["design"] = d;
  j["grid_n"] = c.grid_n;
  j["t_end"] = c.t_end;
  if (c.x0_random_scale)
    j["x0_random_scale"] = *c.x0_random_scale;
  else
    j["x0"] = c.x0;
  json u;
  if (!c.u0.samples.empty()) u["samples"] = c.u0.samples;
  if (!c.u0.segments.empty()) {
    json segs = json::array();
    for (const auto& [x, v] : c.u0.segments) segs.push_back({x, v});
    u["segments"] = segs;
  }
  if (c.u0.random_segments > 0) {
    u["random_segments"] = c.u0.random_segments;
    u["random_scale"] = c.u0.random_scale;
  }
  u["constant"] = c.u0.constant;
  j["u0"] = u;
  j["mode"] = to_string(c.mode);
  j["seed"] = c.seed;
  j["hold"] = c.hold == BoundaryHold::Linear ? "linear" : "zoh";
  j["snapshot_stride"] = c.snapshot_stride;
  j["diag_stride"] = c.diag_stride;
  return j;
}

std::string trace_csv(const SimTrace& trace) {
  std::string out = "t";
  for (int i = 1; i <= trace.n; ++i) out += ",X_" + std::to_string(i);
  out += ",u_sup,U,mu,phase,norm,w_sup,d\n";
  for (const auto& r : trace.records) {
    out += format_double(r.t);
    for (Eigen::Index i = 0; i < r.X.size(); ++i) out += "," + format_double(r.X[i]);
    out +=
        "," + format_double(r.u_sup) + "," + format_double(r.U) + "," + format_double(r.mu) + ",";
    out += r.phase ? to_string(*r.phase) : "none";
    out += "," + format_double(r.norm) + "," + format_double(r.w_sup) + "," + format_double(r.d) +
           "\n";
  }
  return out;
}

std::string snapshots_csv(const SimTrace& trace) {
  std::string out = "t";
  for (int k = 0; k <= trace.grid_n; ++k) out += ",u_" + std::to_string(k);
  out += "\n";
  for (const auto& s : trace.snapshots) {
    out += format_double(s.t);
    for (double v : s.u) out += "," + format_double(v);
    out += "\n";
  }
  return out;
}

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(
        line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_double(std::string_view s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  std::string tmp(s);
  char* end = nullptr;
  const double v = std::strtod(tmp.c_str(), &end);
  if (tmp.empty() || end != tmp.c_str() + tmp.size()) throw ConfigError("bad number '" + tmp + "'");
  return v;
}

}  // namespace

SimTrace parse_trace_csv(std::string_view text, Mode mode, double dt, int grid_n) {
  SimTrace trace;
  trace.mode = mode;
  trace.dt = dt;
  trace.grid_n = grid_n;
  if (text.empty() || text.back() != '\n') throw ConfigError("trace file is truncated");
  const auto lines = split(text.substr(0, text.size() - 1), '\n');
  const auto header = split(lines.front(), ',');
  const int n = static_cast<int>(header.size()) - 8;
  if (n < 1 || header.front() != "t" || header.back() != "d")
    throw ConfigError("unexpected trace header");
  trace.n = n;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const auto cols = split(lines[li], ',');
    if (cols.size() != header.size())
      throw ConfigError("trace row " + std::to_string(li) + " has the wrong column count");
    TraceRecord r;
    r.t = parse_double(cols[0]);
    r.X.resize(n);
    for (int i = 0; i < n; ++i) r.X[i] = parse_double(cols[1 + i]);
    std::size_t c = 1 + n;
    r.u_sup = parse_double(cols[c++]);
    r.U = parse_double(cols[c++]);
    r.mu = parse_double(cols[c++]);
    const auto phase = cols[c++];
    if (phase == "zoom_out")
      r.phase = Phase::ZoomOut;
    else if (phase == "zoom_in")
      r.phase = Phase::ZoomIn;
    else if (phase != "none")
      throw ConfigError("bad phase value in trace");
    r.norm = parse_double(cols[c++]);
    r.w_sup = parse_double(cols[c++]);
    r.d = parse_double(cols[c++]);
    if (!trace.t1_star && r.phase == Phase::ZoomIn) trace.t1_star = r.t;
    trace.records.push_back(std::move(r));
  }
  return trace;
}

}  // namespace qpl::io
