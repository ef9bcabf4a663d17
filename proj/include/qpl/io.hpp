#pragma once

#include <filesystem>
#include <json.hpp>
#include <string>
#include <string_view>

#include "qpl/gains.hpp"
#include "qpl/sim.hpp"
#include "qpl/verify.hpp"

namespace qpl::io {

using nlohmann::json;

// Shortest text that reads back to the same double (17 significant digits).
std::string format_double(double v);

// Writes through a temporary file in the same directory and renames it into place.
void write_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

std::string sha256_hex(std::string_view content);

// Flat key-value documents.
json to_json(const GainLedger& ledger);
GainLedger ledger_from_json(const json& j);
json to_json(const EnvelopeReport& report);
json to_json(const std::vector<SupervisorEvent>& events);

// Scenario configs come as JSON or TOML; the format follows the file extension
// (.toml for TOML, anything else is read as JSON).
ScenarioConfig config_from_json(const json& j);
ScenarioConfig load_config(const std::filesystem::path& path);
json parse_document(const std::filesystem::path& path);
// Resolved config (defaults filled from the scenario) for manifests and reruns.
json to_json(const ScenarioConfig& config);

// Trace CSV: t, X_1..X_n, u_sup, U, mu, phase, norm, w_sup, d. NaN is written as "nan" and the
// phase column as zoom_out, zoom_in or none.
std::string trace_csv(const SimTrace& trace);
// t, u_0..u_N per snapshot.
std::string snapshots_csv(const SimTrace& trace);

// Parses a trace CSV back. Throws ConfigError on malformed or ragged rows.
SimTrace parse_trace_csv(std::string_view text, Mode mode, double dt, int grid_n);

}  // namespace qpl::io
