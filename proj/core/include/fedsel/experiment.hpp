#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fedsel/config.hpp"
#include "fedsel/federation.hpp"

namespace fedsel {

/// A grid of runs: the cartesian product of the override lists applied to a
/// base config, one run per cell per seed. Omitted lists fall back to the
/// base config's single value.
struct SweepSpec {
  ExperimentConfig base;
  std::vector<StrategyOptions> strategies;
  std::vector<PartitionConfig> partitions;
  std::vector<VolatilityMode> volatilities;
  std::vector<std::uint32_t> client_counts;
  std::vector<double> ratios;
  std::vector<std::uint64_t> seeds;

  static SweepSpec from_json_text(const std::string& text);
  static SweepSpec from_json_file(const std::string& path);

  /// All run configs in deterministic order.
  std::vector<ExperimentConfig> expand() const;
};

/// Finals plus the per-round series for one completed run.
struct RunSummary {
  std::string fingerprint;
  ExperimentConfig config;
  double final_accuracy = 0.0;
  double final_jfi = 0.0;
  double final_time_ks = 0.0;  // cumulative seconds / 1000
  double final_auc_macro = 0.0;
  double final_auc_micro = 0.0;
  std::vector<RoundRecord> rounds;
};

struct FailedRun {
  std::string fingerprint;
  ExperimentConfig config;
  std::string error;
};

struct SweepResult {
  std::vector<RunSummary> runs;      // sorted by fingerprint
  std::vector<FailedRun> failures;   // sorted by fingerprint
};

struct SweepOptions {
  std::string out_dir;         // empty: no files written
  unsigned threads = 1;
  std::string checkpoint_dir;  // empty: no checkpoints
};

RunSummary summarize_run(const ExperimentConfig& config, const RunOutput& output);

/// Run every cell of the sweep. Cells sharing a seed observe identical
/// partition and resource draws regardless of strategy. Completed run
/// summaries are written to <out_dir>/runs/ incrementally; table.csv,
/// series.jsonl and failures.jsonl are written at the end, byte-identical
/// for any worker count.
SweepResult run_sweep(const SweepSpec& spec, const SweepOptions& options = {});

/// CSV aggregated over seeds: group key columns followed by
/// acc, time_ks, jfi, auc_macro, auc_micro (means per group).
std::string emit_table(std::span<const RunSummary> summaries,
                       std::span<const std::string> group_by);
std::string emit_table(std::span<const RunSummary> summaries);

/// One JSON object per (run, round) with a fixed key order:
/// fingerprint, strategy, partition, volatility, round, loss, accuracy,
/// jfi, cum_time_s.
std::string emit_series(std::span<const RunSummary> summaries);

/// Full per-run JSON document (config, finals, per-round records).
std::string run_summary_json(const RunSummary& summary);

}  // namespace fedsel
