#include "fedsel/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

#include "fedsel/errors.hpp"

namespace fedsel {

double jfi(std::span<const std::uint64_t> counts) {
  if (counts.empty()) throw AllZero("jfi over an empty count vector");
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::uint64_t c : counts) {
    double v = static_cast<double>(c);
    sum += v;
    sum_sq += v * v;
  }
  if (sum_sq == 0.0) throw AllZero("jfi is undefined when every count is zero");
  return (sum * sum) / (static_cast<double>(counts.size()) * sum_sq);
}

double auc_binary(std::span<const double> scores, std::span<const int> labels) {
  const std::size_t n = scores.size();
  std::size_t n_pos = 0;
  for (int y : labels) n_pos += (y != 0);
  std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw SingleClass("auc needs both classes present");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });

  // Average ranks over ties, then the Mann-Whitney statistic.
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    double avg_rank = 0.5 * static_cast<double>(i + j) + 1.0;  // 1-based
    for (std::size_t t = i; t <= j; ++t) {
      if (labels[order[t]] != 0) rank_sum_pos += avg_rank;
    }
    i = j + 1;
  }
  double u = rank_sum_pos -
             0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1);
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

MulticlassAuc auc_multiclass(std::span<const double> prob_matrix, std::size_t n_classes,
                             std::span<const int> labels) {
  const std::size_t n = labels.size();
  std::vector<std::size_t> class_counts(n_classes, 0);
  for (int y : labels) class_counts[static_cast<std::size_t>(y)] += 1;
  std::size_t present = 0;
  for (std::size_t c : class_counts) present += (c > 0);
  if (present < 2) throw SingleClass("auc_multiclass needs >= 2 classes present");

  MulticlassAuc out;

  // Macro: one-vs-rest over classes that appear.
  std::vector<double> scores(n);
  std::vector<int> indicator(n);
  for (std::size_t c = 0; c < n_classes; ++c) {
    if (class_counts[c] == 0) continue;
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = prob_matrix[i * n_classes + c];
      indicator[i] = labels[i] == static_cast<int>(c) ? 1 : 0;
    }
    out.macro += auc_binary(scores, indicator);
  }
  out.macro /= static_cast<double>(present);

  // Micro: flatten every (sample, class) pair.
  std::vector<double> flat_scores(n * n_classes);
  std::vector<int> flat_labels(n * n_classes);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < n_classes; ++c) {
      flat_scores[i * n_classes + c] = prob_matrix[i * n_classes + c];
      flat_labels[i * n_classes + c] = labels[i] == static_cast<int>(c) ? 1 : 0;
    }
  }
  out.micro = auc_binary(flat_scores, flat_labels);
  return out;
}

}  // namespace fedsel
