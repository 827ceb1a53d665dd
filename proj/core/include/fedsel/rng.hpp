#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace fedsel {

/// Named deterministic random stream.
///
/// Every random draw in the simulator flows through one of these. A stream is
/// identified by (seed, label); identical pairs produce identical draw
/// sequences, and distinct labels produce statistically independent sequences.
/// Labels name the purpose of the stream, e.g. "partition",
/// "resources.round.17" or "shuffle.round.2.client.3.epoch.0", so that
/// changing one consumer (say, the selection strategy) cannot perturb the
/// draws seen by another.
class RngStream {
 public:
  RngStream() = default;

  static RngStream derive(std::uint64_t seed, std::string_view label);

  /// Child stream labeled `label() + "." + suffix` under the same seed.
  RngStream derive(std::string_view suffix) const;

  std::uint64_t seed() const { return seed_; }
  const std::string& label() const { return label_; }

  std::uint64_t next_u64();

  /// Uniform in [0, 1).
  double uniform01();

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi);

  /// Uniform integer in [0, bound); unbiased. bound must be > 0.
  std::uint64_t uniform_below(std::uint64_t bound);

  /// Standard normal via Box-Muller.
  double normal();

  /// Gamma(shape, 1) via Marsaglia-Tsang squeeze.
  double gamma(double shape);

  /// One draw from Dirichlet(alpha, ..., alpha) over n components.
  std::vector<double> dirichlet(double alpha, std::size_t n);

  /// In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    if (items.size() < 2) return;
    for (std::size_t i = items.size() - 1; i > 0; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_below(i + 1));
      std::swap(items[i], items[j]);
    }
  }

  /// k distinct values drawn uniformly from [0, population), in draw order.
  std::vector<std::uint32_t> sample_without_replacement(std::uint32_t population,
                                                        std::uint32_t k);

 private:
  RngStream(std::uint64_t seed, std::string label, std::uint64_t state);

  std::uint64_t seed_ = 0;
  std::string label_;
  std::uint64_t state_ = 0;
};

/// Spec-level entry point; see RngStream::derive.
RngStream derive_stream(std::uint64_t seed, std::string_view label);

}  // namespace fedsel
