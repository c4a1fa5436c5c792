#include "nnma/metrics.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace nnma {

ConfusionCounts confusion_counts(std::span<const std::size_t> predictions,
                                 std::span<const std::size_t> golds, std::size_t num_labels) {
  if (predictions.size() != golds.size())
    throw std::invalid_argument("confusion_counts: " + std::to_string(predictions.size()) +
                                " predictions for " + std::to_string(golds.size()) + " golds");
  if (golds.empty()) throw std::invalid_argument("confusion_counts: empty input");
  ConfusionCounts c;
  c.true_positives.assign(num_labels, 0);
  c.false_positives.assign(num_labels, 0);
  c.false_negatives.assign(num_labels, 0);
  for (std::size_t i = 0; i < golds.size(); ++i) {
    const std::size_t p = predictions[i], g = golds[i];
    if (p >= num_labels || g >= num_labels)
      throw std::out_of_range("confusion_counts: label index out of range");
    if (p == g) {
      ++c.true_positives[g];
      ++c.correct;
    } else {
      ++c.false_positives[p];
      ++c.false_negatives[g];
    }
  }
  c.total = golds.size();
  return c;
}

ClassificationMetrics macro_f1(std::span<const std::size_t> predictions,
                               std::span<const std::size_t> golds, std::size_t num_labels) {
  ClassificationMetrics m;
  m.counts = confusion_counts(predictions, golds, num_labels);
  const auto& c = m.counts;
  m.per_class_f1.resize(num_labels, 0.0);
  for (std::size_t k = 0; k < num_labels; ++k) {
    const double tp = static_cast<double>(c.true_positives[k]);
    const double predicted = tp + static_cast<double>(c.false_positives[k]);
    const double actual = tp + static_cast<double>(c.false_negatives[k]);
    const double precision = predicted > 0 ? tp / predicted : 0.0;
    const double recall = actual > 0 ? tp / actual : 0.0;
    m.per_class_f1[k] =
        precision + recall > 0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
  }
  m.macro_f1 = num_labels ? std::accumulate(m.per_class_f1.begin(), m.per_class_f1.end(), 0.0) /
                                static_cast<double>(num_labels)
                          : 0.0;
  m.accuracy = static_cast<double>(c.correct) / static_cast<double>(c.total);
  return m;
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size())
    throw std::invalid_argument("kl_divergence: lengths " + std::to_string(p.size()) + " and " +
                                std::to_string(q.size()) + " differ");
  if (p.empty()) throw std::invalid_argument("kl_divergence: empty distributions");
  const double sp = std::accumulate(p.begin(), p.end(), 0.0);
  const double sq = std::accumulate(q.begin(), q.end(), 0.0);
  if (std::abs(sp - 1.0) > 1e-6 || std::abs(sq - 1.0) > 1e-6)
    throw std::invalid_argument("kl_divergence: inputs must sum to 1");
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] < 0.0 || q[i] < 0.0) throw std::invalid_argument("kl_divergence: negative entry");
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) throw std::invalid_argument("kl_divergence: q is zero where p is positive");
    kl += p[i] * std::log(p[i] / q[i]);
  }
  // Rounding can push near-identical inputs a few ulps below zero.
  return kl < 0.0 ? 0.0 : kl;
}

}  // namespace nnma
