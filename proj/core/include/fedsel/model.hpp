#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fedsel/dataset.hpp"
#include "fedsel/rng.hpp"

namespace fedsel {

/// Shape of the shared model: softmax regression when hidden_units == 0,
/// otherwise one tanh hidden layer. All arithmetic is in 64-bit reals.
struct ModelSpec {
  std::size_t n_features = 0;
  std::size_t n_classes = 0;
  std::size_t hidden_units = 0;

  std::size_t param_count() const {
    if (hidden_units == 0) {
      return n_features * n_classes + n_classes;
    }
    return n_features * hidden_units + hidden_units +
           hidden_units * n_classes + n_classes;
  }

  bool operator==(const ModelSpec&) const = default;
};

/// Flat parameter vector w with its shape metadata.
struct ModelParams {
  ModelSpec spec;
  std::vector<double> values;
};

/// Glorot-uniform weights, zero biases.
ModelParams init_params(const ModelSpec& spec, RngStream& rng);

struct LossGrad {
  double loss = 0.0;
  std::vector<double> gradient;
};

/// Mean softmax cross-entropy and its analytic gradient over the given batch.
LossGrad loss_and_gradient(const ModelParams& params, const Dataset& data,
                           std::span<const std::size_t> batch);

/// Mini-batch SGD over the shard: `epochs` passes, shuffling per epoch via a
/// child stream, final short batch kept. Returns an updated copy.
ModelParams local_train(const ModelParams& params, const Dataset& data,
                        std::span<const std::size_t> shard, std::uint32_t epochs,
                        double learning_rate, std::uint32_t batch_size,
                        const RngStream& rng);

struct Evaluation {
  double accuracy = 0.0;
  double mean_loss = 0.0;
  std::vector<double> class_scores;  // n_samples * n_classes probabilities
};

/// Accuracy (argmax ties resolve to the lowest class index), mean loss, and
/// the full probability matrix.
Evaluation evaluate(const ModelParams& params, const Dataset& data);

// Little-endian binary blob with a small shape header; used by checkpoints.
std::vector<unsigned char> serialize_params(const ModelParams& params);
ModelParams deserialize_params(std::span<const unsigned char> bytes);
void save_params(const ModelParams& params, const std::string& path);
ModelParams load_params(const std::string& path);

}  // namespace fedsel
