#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fedsel {

enum class PartitionScheme { Iid, ClassNonIid, QuantitySkew };
enum class VolatilityMode { Static, Volatile };
enum class StrategyKind { Random, CompGreedy, CommGreedy, Rbff, Rbcsf };
enum class DatasetKind { Synthetic, Idx, Cifar10Binary };

std::string_view to_string(PartitionScheme scheme);
std::string_view to_string(VolatilityMode mode);
std::string_view to_string(StrategyKind kind);
std::string_view to_string(DatasetKind kind);

PartitionScheme parse_partition_scheme(std::string_view name);
VolatilityMode parse_volatility_mode(std::string_view name);
StrategyKind parse_strategy_kind(std::string_view name);
DatasetKind parse_dataset_kind(std::string_view name);

/// Closed interval for a resource capability, in the capability's own unit.
struct Range {
  double min = 0.0;
  double max = 0.0;
};

struct PartitionConfig {
  PartitionScheme scheme = PartitionScheme::Iid;
  std::uint32_t classes_per_client = 2;  // ClassNonIid only
  double dirichlet_alpha = 0.5;          // QuantitySkew only
};

struct StrategyOptions {
  StrategyKind kind = StrategyKind::Random;
  /// RBCSF fairness penalty weight. Unset means "derive from the resource
  /// ranges" (see default_rbcsf_alpha in selection.hpp).
  std::optional<double> alpha;
  bool normalize_reputation = false;
};

struct SyntheticSpec {
  std::uint64_t n_samples = 10000;
  std::uint32_t n_features = 20;
  std::uint32_t n_classes = 10;
  double class_separation = 3.0;
};

struct IdxPaths {
  std::string images;
  std::string labels;
};

struct DatasetConfig {
  DatasetKind kind = DatasetKind::Synthetic;
  SyntheticSpec synthetic;
  IdxPaths idx;                        // Idx only
  std::vector<std::string> cifar_files;  // Cifar10Binary only
};

/// Every knob of a single run. Loadable from JSON whose keys mirror the field
/// names; unknown keys are a hard error.
struct ExperimentConfig {
  std::uint32_t num_clients = 50;
  double selection_ratio = 0.4;
  std::uint32_t rounds = 50;
  std::uint32_t local_epochs = 1;
  double learning_rate = 0.01;
  std::uint32_t batch_size = 32;
  PartitionConfig partition;
  VolatilityMode volatility = VolatilityMode::Static;
  Range comp_range{50.0, 200.0};   // samples/second
  Range comm_range{1e5, 5e5};      // bits/second
  StrategyOptions strategy;
  /// Unset means 64 bits per model parameter.
  std::optional<std::uint64_t> model_size_bits;
  std::uint32_t hidden_units = 0;
  std::uint64_t seed = 0;
  DatasetConfig dataset;

  /// Throws ConfigError on any violated invariant.
  void validate() const;

  static ExperimentConfig from_json_text(const std::string& text);
  static ExperimentConfig from_json_file(const std::string& path);

  /// Canonical single-line JSON with every field present and keys sorted.
  /// Two configs are identical iff their canonical forms are equal.
  std::string canonical_json() const;

  /// Hex hash of canonical_json(); used to key per-run outputs.
  std::string fingerprint() const;
};

/// ceil(ratio * N) clamped to [1, N]. Tolerates representation error in the
/// product (0.4 * 50 must give 20, not 21).
std::uint32_t cohort_size(std::uint32_t num_clients, double selection_ratio);

}  // namespace fedsel
