#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace nnma {

struct ConfusionCounts {
  std::vector<std::size_t> true_positives;
  std::vector<std::size_t> false_positives;
  std::vector<std::size_t> false_negatives;
  std::size_t correct = 0;
  std::size_t total = 0;
};

struct ClassificationMetrics {
  double macro_f1 = 0.0;
  double accuracy = 0.0;
  std::vector<double> per_class_f1;
  ConfusionCounts counts;
};

ConfusionCounts confusion_counts(std::span<const std::size_t> predictions,
                                 std::span<const std::size_t> golds, std::size_t num_labels);

// Per-class F1 = 2PR/(P+R), taken as 0 when undefined; macro-F1 is the
// unweighted mean over all `num_labels` classes.
ClassificationMetrics macro_f1(std::span<const std::size_t> predictions,
                               std::span<const std::size_t> golds, std::size_t num_labels);

// sum_i p_i ln(p_i / q_i) with 0 ln(0/q) = 0. Both inputs must sum to 1
// within 1e-6 and q must be strictly positive where p is.
double kl_divergence(std::span<const double> p, std::span<const double> q);

}  // namespace nnma
