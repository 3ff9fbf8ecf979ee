#pragma once

// Experiment orchestration: a strict JSON config, repeated seeded runs of an
// optimizer roster on a Bars-and-Stripes circuit, and CSV/JSON persistence.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fastslow/bas.hpp"
#include "fastslow/optim.hpp"
#include "fastslow/plateau.hpp"
#include "fastslow/rng.hpp"

namespace fastslow::harness {

enum class OptimizerKind { NM, SGD, BO, FastSlowNM, FastSlowSGD };

const char* to_string(OptimizerKind k);
/// Throws ConfigError for unknown names.
OptimizerKind parse_optimizer_kind(const std::string& name);

struct RosterEntry {
  std::string label;
  OptimizerKind kind = OptimizerKind::FastSlowNM;
  double simplex_scale = 0.1;
  double learning_rate = 0.05;
  std::size_t candidates = 1024;
  std::size_t local_candidates = 64;
  std::size_t retune_every = 10;
};

struct ExperimentConfig {
  int n_rows = 2;
  int n_cols = 2;
  int layers = 1;
  std::vector<std::size_t> mask;
  std::uint64_t shots = 1024;
  std::size_t repetitions = 5;
  std::vector<RosterEntry> roster;
  optim::SwitchPolicy policy = optim::SwitchPolicy::fixed(45);
  std::uint64_t budget = 300;
  Seed seed = 2022;
  double clip_epsilon = 1e-8;
  std::string output_dir = "results";
  std::size_t workers = 1;
  /// Iteration indices at which the incumbent's distribution is snapshotted.
  std::vector<std::size_t> checkpoints;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Parses and validates config text. Unknown keys are rejected; parse errors
/// report the line number.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Canonical JSON echo of a config (all defaults filled in).
std::string config_to_json(const ExperimentConfig& config);

/// Environment variable that overrides the configured output directory.
inline constexpr const char* kOutputDirEnv = "FASTSLOW_OUT";

struct Checkpoint {
  std::size_t iteration = 0;
  std::vector<double> distribution;
  bas::QbasReport qbas;
};

struct ExperimentRecord {
  std::string label;
  OptimizerKind kind = OptimizerKind::NM;
  std::size_t repetition = 0;
  Seed seed = 0;
  optim::OptimizerTrace trace;
  std::vector<double> final_theta;
  std::vector<double> final_distribution;  // exact, at the incumbent
  bas::QbasReport qbas;                    // from `shots` fresh samples
  std::vector<Checkpoint> checkpoints;
  double wall_seconds = 0.0;
  std::string error;  // non-empty when the run failed

  bool ok() const { return error.empty(); }
};

/// Seed of one (label, repetition) run.
Seed run_seed(Seed base, const std::string& label, std::size_t repetition);

/// Runs one roster entry once.
ExperimentRecord run_single(const ExperimentConfig& config, const RosterEntry& entry,
                            std::size_t repetition);

/// Every roster entry times every repetition, roster-major. Runs may execute
/// concurrently on `config.workers` threads; output order is fixed.
std::vector<ExperimentRecord> run_experiment(const ExperimentConfig& config);

struct AggregateCurve {
  std::string label;
  std::vector<double> mean;  // of best_so_far per iteration
  std::vector<double> std;   // sample std across repetitions
};

/// Per-label mean/std of best_so_far. Shorter traces are padded with their
/// final best_so_far (the running minimum persists).
std::vector<AggregateCurve> aggregate_curves(const std::vector<ExperimentRecord>& records);

/// File name of a record's trace CSV.
std::string trace_file_name(const ExperimentRecord& r);

/// Writes one trace CSV per record plus summary.json; returns written paths.
/// Throws IoError naming the path on failure.
std::vector<std::filesystem::path> write_results(const std::vector<ExperimentRecord>& records,
                                                 const ExperimentConfig& config,
                                                 const std::filesystem::path& directory);

struct TraceRow {
  std::size_t iteration = 0;
  std::string phase;
  std::uint64_t circuit_executions = 0;
  double cost = 0.0;
  double best_so_far = 0.0;
};

std::vector<TraceRow> read_trace_csv(const std::filesystem::path& path);

/// "%.17g" formatting used by every writer.
std::string format_double(double v);

/// Plateau scan rows as CSV text.
std::string scan_to_csv(const plateau::VarianceScanResult& r);

}  // namespace fastslow::harness
