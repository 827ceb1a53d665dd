#pragma once

// Independent reference implementations used as test oracles. These
// deliberately avoid the library's code paths: scores are recomputed from
// the raw formulas, rankings use repeated max extraction, AUC counts pairs
// directly, and the softmax trainer below is self-contained.

#include <cstdint>
#include <span>
#include <vector>

#include "fedsel/config.hpp"
#include "fedsel/dataset.hpp"
#include "fedsel/ledger.hpp"
#include "fedsel/selection.hpp"

namespace oracle {

/// Jain's index computed in exact integer arithmetic before the final divide.
double jfi(std::span<const std::uint64_t> counts);

/// Pairwise positive/negative comparison with half-credit ties; O(n^2).
double auc_pairs(std::span<const double> scores, std::span<const int> labels);

struct MacroMicroAuc {
  double macro = 0.0;
  double micro = 0.0;
};
MacroMicroAuc auc_multiclass_pairs(std::span<const double> prob_matrix,
                                   std::size_t n_classes, std::span<const int> labels);

/// Raw-formula scores for one round (reputation, RBFF, RBCSF), no shared code
/// with the selection module.
std::vector<double> scores(fedsel::StrategyKind kind,
                           std::span<const fedsel::ResourceProfile> profiles,
                           std::span<const std::uint64_t> counts, double alpha,
                           bool normalize);

/// Cohort by repeated maximum extraction with ascending-id tie break,
/// returned sorted ascending.
std::vector<fedsel::ClientId> select_bruteforce(
    fedsel::StrategyKind kind, std::span<const fedsel::ResourceProfile> profiles,
    std::span<const std::uint64_t> counts, std::size_t k, double alpha,
    bool normalize);

/// Full-batch gradient-descent softmax regression, self-contained; returns
/// training accuracy. Used to judge dataset separability.
double centralized_softmax_train_accuracy(const fedsel::Dataset& data,
                                          int iterations, double learning_rate);

}  // namespace oracle
