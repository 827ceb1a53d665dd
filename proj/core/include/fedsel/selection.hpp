#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fedsel/config.hpp"
#include "fedsel/ledger.hpp"
#include "fedsel/rng.hpp"

namespace fedsel {

/// One client's capabilities for one round.
struct ResourceProfile {
  double comp_speed = 0.0;  // samples/second
  double comm_speed = 0.0;  // bits/second
};

/// Fully resolved strategy parameters.
struct StrategyConfig {
  StrategyKind kind = StrategyKind::Random;
  double alpha = 0.0;  // RBCSF penalty weight
  bool normalize_reputation = false;
};

struct ScoreRecord {
  ClientId client = 0;
  double reputation = 0.0;
  double score = 0.0;
};

/// Default RBCSF penalty weight: sized so one selection moves a client by
/// roughly one ranking position at the configured resource ranges.
double default_rbcsf_alpha(const Range& comp_range, const Range& comm_range,
                           bool normalized);

/// Resolve StrategyOptions against the experiment's resource ranges.
StrategyConfig make_strategy_config(const ExperimentConfig& config);

/// Raw reputation is comp_speed + comm_speed. Normalized reputation min-max
/// maps each capability to [0,1] over this round's federation (a degenerate
/// range maps to 0.5) before summing.
double reputation(const ResourceProfile& profile,
                  std::span<const ResourceProfile> all_profiles, bool normalize);

/// reputation / (1 + prev_count)
double rbff_score(double reputation, std::uint64_t prev_count);

/// reputation - alpha * prev_count (may be negative)
double rbcsf_score(double reputation, std::uint64_t prev_count, double alpha);

/// Per-client reputation and strategy score for one round. Random scores are
/// zero (selection ignores them).
std::vector<ScoreRecord> score_clients(const StrategyConfig& strategy,
                                       std::span<const ResourceProfile> profiles,
                                       const SelectionLedger& ledger);

/// The round's cohort: k distinct ids, sorted ascending. Ranking strategies
/// break score ties by ascending ClientId; Random draws without replacement
/// from `rng`.
std::vector<ClientId> select(const StrategyConfig& strategy,
                             std::span<const ResourceProfile> profiles,
                             const SelectionLedger& ledger, std::size_t k,
                             RngStream& rng);

}  // namespace fedsel
