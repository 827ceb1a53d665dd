#include "fedsel/federation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "fedsel/errors.hpp"
#include "fedsel/logging.hpp"
#include "fedsel/metrics.hpp"

namespace fedsel {

namespace {
constexpr double kTestFraction = 0.1;
}

std::vector<ResourceProfile> draw_profiles(const Range& comp_range,
                                           const Range& comm_range,
                                           std::uint32_t n_clients, RngStream& rng) {
  std::vector<ResourceProfile> profiles(n_clients);
  for (ResourceProfile& p : profiles) {
    p.comp_speed = rng.uniform(comp_range.min, comp_range.max);
    p.comm_speed = rng.uniform(comm_range.min, comm_range.max);
  }
  return profiles;
}

EnvironmentState sample_environment(
    const ExperimentConfig& config, std::uint32_t round,
    const std::optional<std::vector<ResourceProfile>>& static_profiles,
    RngStream& rng) {
  EnvironmentState env;
  env.round = round;
  if (config.volatility == VolatilityMode::Static) {
    if (!static_profiles.has_value()) {
      throw ConfigError("static environment requires the round-0 profile draw");
    }
    env.profiles = *static_profiles;
  } else {
    env.profiles = draw_profiles(config.comp_range, config.comm_range,
                                 config.num_clients, rng);
  }
  return env;
}

ModelParams fedavg_aggregate(std::span<const ClientUpdate> updates) {
  if (updates.empty()) throw SpecMismatch("fedavg_aggregate: no updates");
  const ModelSpec& spec = updates[0].params.spec;
  double total = 0.0;
  for (const ClientUpdate& u : updates) {
    if (u.params.spec != spec) {
      throw SpecMismatch("fedavg_aggregate: mismatched model specs");
    }
    if (u.shard_size == 0) {
      throw SpecMismatch("fedavg_aggregate: zero-size shard");
    }
    total += static_cast<double>(u.shard_size);
  }

  ModelParams out;
  out.spec = spec;
  out.values.assign(updates[0].params.values.size(), 0.0);
  for (const ClientUpdate& u : updates) {
    double weight = static_cast<double>(u.shard_size) / total;
    for (std::size_t i = 0; i < out.values.size(); ++i) {
      out.values[i] += weight * u.params.values[i];
    }
  }
  return out;
}

double round_time(std::span<const ClientId> selected, const EnvironmentState& env,
                  const Partition& partition, std::uint32_t local_epochs,
                  std::uint64_t model_size_bits) {
  if (selected.empty()) throw SpecMismatch("round_time: empty cohort");
  double worst = 0.0;
  for (ClientId id : selected) {
    const ResourceProfile& p = env.profiles.at(id);
    double compute = static_cast<double>(local_epochs) *
                     static_cast<double>(partition.shards.at(id).size()) / p.comp_speed;
    double communicate = static_cast<double>(model_size_bits) / p.comm_speed;
    worst = std::max(worst, compute + communicate);
  }
  return worst;
}

RunOutput run_experiment(const ExperimentConfig& config) {
  config.validate();
  const std::uint64_t seed = config.seed;

  RngStream data_rng = derive_stream(seed, "synthetic");
  Dataset pool = load_dataset(config.dataset, data_rng);

  if (config.partition.scheme == PartitionScheme::ClassNonIid &&
      config.partition.classes_per_client > pool.n_classes) {
    throw ConfigError("classes_per_client exceeds dataset class count");
  }

  RngStream split_rng = derive_stream(seed, "testsplit");
  auto [train, test] = split_train_test(pool, kTestFraction, split_rng);
  if (test.n_samples() == 0) {
    throw TooFewSamples("dataset too small to hold out a test split");
  }

  RngStream partition_rng = derive_stream(seed, "partition");
  Partition partition = make_partition(train, config, partition_rng);

  ModelSpec spec{train.n_features, train.n_classes, config.hidden_units};
  RngStream init_rng = derive_stream(seed, "init");
  ModelParams global = init_params(spec, init_rng);
  const std::uint64_t model_size_bits =
      config.model_size_bits.value_or(64 * static_cast<std::uint64_t>(spec.param_count()));

  std::optional<std::vector<ResourceProfile>> static_profiles;
  if (config.volatility == VolatilityMode::Static) {
    RngStream base_rng = derive_stream(seed, "resources.round.0");
    static_profiles = draw_profiles(config.comp_range, config.comm_range,
                                    config.num_clients, base_rng);
  }

  const StrategyConfig strategy = make_strategy_config(config);
  const std::uint32_t k = cohort_size(config.num_clients, config.selection_ratio);
  SelectionLedger ledger(config.num_clients);

  const bool test_has_two_classes = [&] {
    std::set<int> seen(test.labels.begin(), test.labels.end());
    return seen.size() >= 2;
  }();

  RunOutput out;
  out.rounds.reserve(config.rounds);
  double clock_s = 0.0;

  for (std::uint32_t round = 1; round <= config.rounds; ++round) {
    try {
      RngStream env_rng = derive_stream(seed, "resources.round." + std::to_string(round));
      EnvironmentState env = sample_environment(config, round, static_profiles, env_rng);

      RngStream select_rng = derive_stream(seed, "selection.round." + std::to_string(round));
      std::vector<ClientId> cohort = select(strategy, env.profiles, ledger, k, select_rng);

      std::vector<ClientUpdate> updates;
      updates.reserve(cohort.size());
      for (ClientId id : cohort) {
        const auto& shard = partition.shards.at(id);
        RngStream train_rng = derive_stream(
            seed, "shuffle.round." + std::to_string(round) + ".client." + std::to_string(id));
        updates.push_back({local_train(global, train, shard, config.local_epochs,
                                       config.learning_rate, config.batch_size, train_rng),
                           shard.size()});
      }
      global = fedavg_aggregate(updates);

      double dt = round_time(cohort, env, partition, config.local_epochs, model_size_bits);
      clock_s += dt;
      ledger.record_round(cohort);

      Evaluation eval = evaluate(global, test);

      RoundRecord record;
      record.round = round;
      record.selected = std::move(cohort);
      record.round_time_s = dt;
      record.cumulative_time_s = clock_s;
      record.global_accuracy = eval.accuracy;
      record.global_loss = eval.mean_loss;
      record.jfi = jfi(ledger.counts());
      if (test_has_two_classes) {
        MulticlassAuc auc = auc_multiclass(eval.class_scores, test.n_classes, test.labels);
        record.auc_macro = auc.macro;
        record.auc_micro = auc.micro;
      } else {
        record.auc_macro = std::numeric_limits<double>::quiet_NaN();
        record.auc_micro = std::numeric_limits<double>::quiet_NaN();
      }
      out.rounds.push_back(std::move(record));
    } catch (const std::exception& e) {
      log_error("run aborted at round " + std::to_string(round));
      throw Error("round " + std::to_string(round) + " failed: " + e.what());
    }
  }

  out.final_params = std::move(global);
  return out;
}

}  // namespace fedsel
