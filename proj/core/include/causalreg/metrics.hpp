#pragma once

// Evaluation metrics over score vectors and discrete tables.

#include <cstdint>
#include <span>
#include <vector>

namespace causalreg::metrics {

/// Mann-Whitney statistic: P(score of a random positive > score of a random
/// negative), ties counted 1/2. Throws UndefinedError unless both classes occur.
double auc(std::span<const double> scores, std::span<const int> labels);

struct F1Result {
  double value = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  /// Set when there are no predicted and no true positives (value forced to 0).
  bool degenerate = false;
};

/// Positive prediction when score > threshold. Throws UndefinedError unless
/// both classes occur.
F1Result f1(std::span<const double> scores, std::span<const int> labels, double threshold = 0.5);

/// Plug-in mutual information in nats between nonnegative integer codes and
/// bits, with 0 ln 0 = 0.
double mutual_information(std::span<const int> x, std::span<const int> y);

/// Fractional ranks (1-based), ties receive their average rank.
std::vector<double> average_ranks(std::span<const double> v);

/// Spearman correlation of average ranks. Throws UndefinedError when either
/// rank vector has zero variance.
double spearman(std::span<const double> a, std::span<const double> b);

struct AtKResult {
  double value = 0.0;
  int used_k = 0;
  bool truncated = false;  // k exceeded the list length
};

/// Mean ground-truth score of the first k entries of `ranking`, which holds
/// variable indices into `truth_scores` (1 causal, 0 not, 0.5 possible).
AtKResult causality_at_k(std::span<const int> ranking, std::span<const double> truth_scores, int k);

/// Binomial proportion interval (Wilson score, two-sided 95%).
struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};
Interval wilson_interval(std::int64_t successes, std::int64_t trials, double z = 1.959963984540054);

}  // namespace causalreg::metrics
