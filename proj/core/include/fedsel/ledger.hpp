#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace fedsel {

/// Client index, stable across rounds and unique within a federation.
using ClientId = std::uint32_t;

/// Cumulative per-client selection counts through the most recently completed
/// round. Updated only by the orchestrator between rounds; fairness-aware
/// strategies and JFI read it.
class SelectionLedger {
 public:
  explicit SelectionLedger(std::uint32_t num_clients)
      : counts_(num_clients, 0) {}

  std::uint32_t num_clients() const {
    return static_cast<std::uint32_t>(counts_.size());
  }

  std::uint64_t count(ClientId id) const { return counts_.at(id); }

  const std::vector<std::uint64_t>& counts() const { return counts_; }

  std::uint64_t total() const {
    std::uint64_t sum = 0;
    for (std::uint64_t c : counts_) sum += c;
    return sum;
  }

  /// Record one completed round's cohort. Ids must be in range; counts only
  /// ever increase.
  void record_round(std::span<const ClientId> cohort) {
    for (ClientId id : cohort) counts_.at(id) += 1;
  }

 private:
  std::vector<std::uint64_t> counts_;
};

}  // namespace fedsel
