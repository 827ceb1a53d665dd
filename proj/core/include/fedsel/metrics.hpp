#pragma once

#include <cstdint>
#include <span>

namespace fedsel {

/// Jain's fairness index (sum c)^2 / (n * sum c^2) over selection counts.
/// Throws AllZero when every count is zero. Result is in (0, 1].
double jfi(std::span<const std::uint64_t> counts);

/// Rank-sum AUC: probability that a random positive outscores a random
/// negative, ties counted half. Labels are 0/1; throws SingleClass when one
/// class is absent.
double auc_binary(std::span<const double> scores, std::span<const int> labels);

struct MulticlassAuc {
  double macro = 0.0;  // unweighted mean of one-vs-rest AUC over present classes
  double micro = 0.0;  // AUC over the flattened (n*C) score/indicator pairs
};

/// prob_matrix is n_samples x n_classes, row-major. Throws SingleClass when
/// fewer than two classes appear in `labels`.
MulticlassAuc auc_multiclass(std::span<const double> prob_matrix, std::size_t n_classes,
                             std::span<const int> labels);

}  // namespace fedsel
