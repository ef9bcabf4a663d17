#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "qpl/io.hpp"
#include "qpl/sim.hpp"

namespace qpl::cli {

inline constexpr const char* kToolVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kUsage = 1, kConditionFailed = 2, kBlowUp = 3 };

// Entry point shared by the executable, the tests and the Python module. args excludes argv[0].
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// The scenario's config with every default made explicit, so a rerun does not search again.
ScenarioConfig resolved_config(const Scenario& scenario);

// Writes trace.csv, snapshots.csv, events.json and ledger.json, then manifest.json listing their
// SHA-256 hashes. Returns the manifest.
io::json write_run(const Scenario& scenario, const SimTrace& trace,
                   const std::filesystem::path& out, const std::string& config_path);

// Exit code for a ledger: 0 when the flags relevant to the mode hold, 2 otherwise.
int ledger_exit_code(const GainLedger& ledger, Mode mode);

struct SweepPoint {
  std::optional<double> Delta, M, mu0, tau, lambda, x0_scale;
  std::optional<int> grid_n;
};

// Cross product of the "sweep" table of a config document. Axes absent from the table keep
// the base value; an axis given as an empty list makes the product empty.
std::vector<SweepPoint> sweep_points(const io::json& doc);
ScenarioConfig apply(const ScenarioConfig& base, const SweepPoint& point);

struct SweepRow {
  SweepPoint point;
  std::string status;  // ok, blowup or error
  bool condition_ok = false;
  double Omega = 0, T = 0;
  double t1_star = 0;
  double windows_to_convergence = 0;  // T-windows after t1* until the norm is 1e-3 of its start
  double max_envelope_ratio = 0;
  double initial_norm = 0, final_norm = 0;
  std::string error;
};

SweepRow sweep_one(const ScenarioConfig& base, const SweepPoint& point);
// Runs every point on up to QPL_THREADS workers (hardware concurrency by default). Row order
// follows the point order regardless of scheduling.
std::vector<SweepRow> run_sweep(const ScenarioConfig& base, const std::vector<SweepPoint>& points);
std::string sweep_csv(const std::vector<SweepRow>& rows);

}  // namespace qpl::cli
