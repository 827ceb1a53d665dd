#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fedsel/config.hpp"
#include "fedsel/dataset.hpp"
#include "fedsel/ledger.hpp"
#include "fedsel/model.hpp"
#include "fedsel/selection.hpp"

namespace fedsel {

/// The per-round realization of every client's resources.
struct EnvironmentState {
  std::uint32_t round = 0;
  std::vector<ResourceProfile> profiles;  // indexed by ClientId
};

/// Per-round outputs of the orchestrator.
struct RoundRecord {
  std::uint32_t round = 0;
  std::vector<ClientId> selected;
  double round_time_s = 0.0;
  double cumulative_time_s = 0.0;
  double global_accuracy = 0.0;
  double global_loss = 0.0;
  double jfi = 0.0;
  double auc_macro = 0.0;  // NaN when the test split holds a single class
  double auc_micro = 0.0;
};

/// One uniform draw of every client's profile from the configured ranges.
std::vector<ResourceProfile> draw_profiles(const Range& comp_range,
                                           const Range& comm_range,
                                           std::uint32_t n_clients, RngStream& rng);

/// Volatile mode draws fresh profiles from `rng`; Static mode returns the
/// round-0 draw unchanged every round.
EnvironmentState sample_environment(const ExperimentConfig& config, std::uint32_t round,
                                    const std::optional<std::vector<ResourceProfile>>& static_profiles,
                                    RngStream& rng);

struct ClientUpdate {
  ModelParams params;
  std::size_t shard_size = 0;
};

/// Elementwise mean weighted by shard sizes over the round's participants.
ModelParams fedavg_aggregate(std::span<const ClientUpdate> updates);

/// Synchronous-round latency: max over selected clients of
/// epochs * shard / comp_speed + model_size_bits / comm_speed.
double round_time(std::span<const ClientId> selected, const EnvironmentState& env,
                  const Partition& partition, std::uint32_t local_epochs,
                  std::uint64_t model_size_bits);

struct RunOutput {
  std::vector<RoundRecord> rounds;
  ModelParams final_params;
};

/// The full training loop: per round, sample the environment, select a cohort
/// against the ledger, train the selected shards locally, aggregate, advance
/// the modeled clock, update the ledger and evaluate on the held-out split.
/// Any error aborts with the failing round number.
RunOutput run_experiment(const ExperimentConfig& config);

}  // namespace fedsel
