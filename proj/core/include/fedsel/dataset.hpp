#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fedsel/config.hpp"
#include "fedsel/rng.hpp"

namespace fedsel {

/// Dense labeled dataset. Features are row-major, labels are class indices
/// in [0, n_classes). Immutable after construction by convention.
struct Dataset {
  std::size_t n_features = 0;
  std::size_t n_classes = 0;
  std::vector<double> features;  // n_samples * n_features
  std::vector<int> labels;

  std::size_t n_samples() const { return labels.size(); }

  std::span<const double> row(std::size_t i) const {
    return {features.data() + i * n_features, n_features};
  }
};

/// Per-client sample assignment. Shard index lists are disjoint and every
/// client holds at least one sample.
struct Partition {
  std::vector<std::vector<std::size_t>> shards;  // indexed by ClientId

  std::size_t total_assigned() const {
    std::size_t n = 0;
    for (const auto& s : shards) n += s.size();
    return n;
  }
};

/// Isotropic Gaussian blobs, one unit-variance cluster per class with means
/// at distance `class_separation` from the origin along random directions.
/// Labels are balanced within +-1.
Dataset generate_synthetic(std::size_t n_samples, std::size_t n_features,
                           std::size_t n_classes, double class_separation,
                           RngStream& rng);

// IDX container (big-endian magic + dims header, raw unsigned bytes).
// Pixel bytes are scaled to [0,1] by /255. Gzip-compressed files are
// accepted, detected by the 1F 8B prefix.
Dataset load_idx(const std::string& image_path, const std::string& label_path);
Dataset load_idx_bytes(std::span<const unsigned char> image_bytes,
                       std::span<const unsigned char> label_bytes);
std::vector<unsigned char> encode_idx_images(const Dataset& data,
                                             std::uint32_t rows, std::uint32_t cols);
std::vector<unsigned char> encode_idx_labels(const Dataset& data);
void write_idx(const Dataset& data, std::uint32_t rows, std::uint32_t cols,
               const std::string& image_path, const std::string& label_path);

// CIFAR-10 binary: repeating 3073-byte records, first byte the label.
Dataset load_cifar10_binary(const std::vector<std::string>& paths);
Dataset load_cifar10_bytes(std::span<const unsigned char> bytes);

/// Random permutation cut into contiguous shards with sizes differing by at
/// most one.
Partition partition_iid(const Dataset& data, std::uint32_t n_clients, RngStream& rng);

/// Each client draws from exactly `classes_per_client` classes; classes are
/// spread round-robin over a shuffled client order and each class's samples
/// are split evenly among the clients that share it.
Partition partition_class_noniid(const Dataset& data, std::uint32_t n_clients,
                                 std::uint32_t classes_per_client, RngStream& rng);

/// Shard sizes proportional to one Dirichlet(alpha,...,alpha) draw over
/// clients, rounded largest-remainder to sum exactly to n_samples and floored
/// at one sample per client. Label mix inside each shard follows the global
/// distribution.
Partition partition_quantity_skew(const Dataset& data, std::uint32_t n_clients,
                                  double dirichlet_alpha, RngStream& rng);

/// Dispatch on config.partition.
Partition make_partition(const Dataset& data, const ExperimentConfig& config,
                         RngStream& rng);

/// Shuffled split into (train, test) with floor(test_fraction * n) test rows.
std::pair<Dataset, Dataset> split_train_test(const Dataset& data,
                                             double test_fraction, RngStream& rng);

/// Materialize the configured dataset (synthetic draws use `rng`).
Dataset load_dataset(const DatasetConfig& config, RngStream& rng);

}  // namespace fedsel
