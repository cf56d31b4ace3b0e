#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mddra/baselines.hpp"
#include "mddra/mddra.hpp"

namespace mddra::harness {

inline constexpr std::string_view kVersion = "1.0.0";

/// Physical dimension of a unit-tagged config value.
enum class Dimension { kLength, kFrequency, kPower, kNoiseDensity, kDecibel, kRate };

/// Parses "<number> <unit>" into SI (m, Hz, W, W/Hz, dB, bit/s). `key` names
/// the offending entry in errors.
double parse_quantity(std::string_view text, Dimension dim, std::string_view key);

/// One sweep axis: a config knob and its grid points.
struct SweepAxis {
  std::string name;  // Ve, Ta, zeta_min, Pmax (W), users_ratio
  std::vector<double> values;
};

/// "Ve=0.1:0.9:5" -> 5 evenly spaced points from 0.1 to 0.9 inclusive;
/// "Ve=0.1,0.5" -> explicit list.
SweepAxis parse_axis(std::string_view text);

/// Applies one axis value to a config.
void apply_axis(const std::string& name, double value, WorldConfig& world, MddraConfig& mddra);

struct ExperimentConfig {
  WorldConfig world;
  MddraConfig mddra;
  std::vector<std::string> schemes{"offline-admm-complete", "lyapunov-truth", "mddra",
                                   "greedy-predicted", "greedy-history-avg"};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::filesystem::path output_dir = "results";
  std::vector<SweepAxis> axes;

  /// Cross-section checks on top of the per-module validators.
  void validate() const;
};

/// Reads a YAML file; absent keys keep the defaults, unknown keys and bare
/// numbers for unit-tagged keys are ConfigErrors naming the key.
ExperimentConfig ingest_config(const std::filesystem::path& path);
ExperimentConfig parse_config(std::string_view yaml_text);
/// File (optional) plus "section.key=value" overrides applied before validation.
ExperimentConfig load_config(const std::optional<std::filesystem::path>& path,
                             const std::vector<std::string>& overrides);

/// Canonical JSON of the resolved config (sorted keys).
std::string canonical_json(const ExperimentConfig& config);
/// FNV-1a 64 of the canonical JSON, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

/// Resolves a scheme name (mddra, baseline tag, 1-4, baselineN) to its spec.
SchemeSpec resolve_scheme(std::string_view name, const MddraConfig& config);

/// Contractual CSV column order.
const std::vector<std::string>& csv_columns();

/// Range checks on emitted values; throws NumericError naming the column.
void check_row(const TraceRow& row);

/// Shortest round-trip decimal form.
std::string format_double(double v);

void write_csv_header(std::ostream& os);
void write_csv_row(std::ostream& os, const TraceRow& row);
void write_csv(std::ostream& os, const std::vector<TraceRow>& rows);

struct SchemeSeedResult {
  std::string scheme;
  std::uint64_t seed = 0;
  double final_eta_T = 0.0;
  double final_kappa = 0.0;
  double final_zeta = 0.0;
  double horizon_kappa = 0.0;  // sum of xi over the horizon
  double horizon_d_tot = 0.0;  // sum of D_tot over the horizon
  double eta_full = 0.0;
  double final_queue_max = 0.0;
  double running_queue_max = 0.0;
  int non_converged = 0;
};

struct ExperimentResult {
  std::string config_hash;
  std::vector<RunResult> runs;  // seed-major, scheme order as configured
  std::vector<SchemeSeedResult> summary;
};

/// Worker count: MDDRA_THREADS if set (>= 1), otherwise the hardware concurrency.
unsigned thread_count();

/// Per-seed BS sites overriding the traffic-weighted placement.
using DeploymentMap = std::map<std::uint64_t, network::Deployment>;

/// Runs every (seed, scheme) pair; pairs execute concurrently.
ExperimentResult run_experiment(const ExperimentConfig& config, const DeploymentMap& deployments = {});

SchemeSeedResult summarize(const RunResult& run);

/// Seed mean of final eta^T for one scheme.
double seed_mean(const ExperimentResult& result, std::string_view scheme,
                 double SchemeSeedResult::*field = &SchemeSeedResult::final_eta_T);

/// <dir>/<scheme>.csv per scheme plus <dir>/summary.json.
void emit_results(const ExperimentResult& result, const ExperimentConfig& config,
                  const std::filesystem::path& dir);

struct SweepPoint {
  std::string axis;
  double value = 0.0;
  std::filesystem::path file;
  ExperimentResult result;
};

/// One experiment per axis point; every point reuses the base config's
/// deployment of each seed. Writes one CSV per point plus <dir>/sweep.json.
std::vector<SweepPoint> run_sweep(const ExperimentConfig& config, const std::filesystem::path& dir);

/// Writes the density and traffic fields of one seed as CSV (tau, cell, x, y, density, demand).
void emit_traffic(const World& world, std::ostream& os);

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Fast invariant and oracle checks (metric hand value, capacity bound,
/// queue contraction, determinism of a short run).
std::vector<CheckResult> run_checks(const ExperimentConfig& config);

/// CLI entry point; returns the process exit code.
int cli(int argc, const char* const* argv);

}  // namespace mddra::harness
