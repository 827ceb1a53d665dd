#include "fedsel/selection.hpp"

#include <algorithm>
#include <numeric>

#include "fedsel/errors.hpp"

namespace fedsel {

double default_rbcsf_alpha(const Range& comp_range, const Range& comm_range,
                           bool normalized) {
  if (normalized) return 0.1;
  return 0.02 * (comp_range.max + comm_range.max);
}

StrategyConfig make_strategy_config(const ExperimentConfig& config) {
  StrategyConfig strategy;
  strategy.kind = config.strategy.kind;
  strategy.normalize_reputation = config.strategy.normalize_reputation;
  strategy.alpha = config.strategy.alpha.value_or(default_rbcsf_alpha(
      config.comp_range, config.comm_range, config.strategy.normalize_reputation));
  return strategy;
}

double reputation(const ResourceProfile& profile,
                  std::span<const ResourceProfile> all_profiles, bool normalize) {
  if (!normalize) {
    return profile.comp_speed + profile.comm_speed;
  }
  double comp_min = all_profiles[0].comp_speed, comp_max = comp_min;
  double comm_min = all_profiles[0].comm_speed, comm_max = comm_min;
  for (const ResourceProfile& p : all_profiles) {
    comp_min = std::min(comp_min, p.comp_speed);
    comp_max = std::max(comp_max, p.comp_speed);
    comm_min = std::min(comm_min, p.comm_speed);
    comm_max = std::max(comm_max, p.comm_speed);
  }
  auto minmax = [](double v, double lo, double hi) {
    return hi > lo ? (v - lo) / (hi - lo) : 0.5;
  };
  return minmax(profile.comp_speed, comp_min, comp_max) +
         minmax(profile.comm_speed, comm_min, comm_max);
}

double rbff_score(double rep, std::uint64_t prev_count) {
  return rep / (1.0 + static_cast<double>(prev_count));
}

double rbcsf_score(double rep, std::uint64_t prev_count, double alpha) {
  return rep - alpha * static_cast<double>(prev_count);
}

std::vector<ScoreRecord> score_clients(const StrategyConfig& strategy,
                                       std::span<const ResourceProfile> profiles,
                                       const SelectionLedger& ledger) {
  std::vector<ScoreRecord> records(profiles.size());
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    ScoreRecord& r = records[i];
    r.client = static_cast<ClientId>(i);
    r.reputation = reputation(profiles[i], profiles, strategy.normalize_reputation);
    switch (strategy.kind) {
      case StrategyKind::Random:
        r.score = 0.0;
        break;
      case StrategyKind::CompGreedy:
        r.score = profiles[i].comp_speed;
        break;
      case StrategyKind::CommGreedy:
        r.score = profiles[i].comm_speed;
        break;
      case StrategyKind::Rbff:
        r.score = rbff_score(r.reputation, ledger.count(r.client));
        break;
      case StrategyKind::Rbcsf:
        r.score = rbcsf_score(r.reputation, ledger.count(r.client), strategy.alpha);
        break;
    }
  }
  return records;
}

std::vector<ClientId> select(const StrategyConfig& strategy,
                             std::span<const ResourceProfile> profiles,
                             const SelectionLedger& ledger, std::size_t k,
                             RngStream& rng) {
  const std::size_t n = profiles.size();
  if (k > n) throw KTooLarge("cohort size exceeds federation size");

  std::vector<ClientId> cohort;
  if (strategy.kind == StrategyKind::Random) {
    cohort = rng.sample_without_replacement(static_cast<std::uint32_t>(n),
                                            static_cast<std::uint32_t>(k));
  } else {
    std::vector<ScoreRecord> records = score_clients(strategy, profiles, ledger);
    std::sort(records.begin(), records.end(), [](const ScoreRecord& a, const ScoreRecord& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.client < b.client;
    });
    cohort.reserve(k);
    for (std::size_t i = 0; i < k; ++i) cohort.push_back(records[i].client);
  }
  std::sort(cohort.begin(), cohort.end());
  return cohort;
}

}  // namespace fedsel
