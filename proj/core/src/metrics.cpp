#include "causalreg/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>

#include "causalreg/errors.hpp"

namespace causalreg::metrics {

namespace {

void check_lengths(std::size_t a, std::size_t b, const char* who) {
  if (a != b) throw ShapeError(std::string(who) + ": length mismatch");
  if (a == 0) throw DomainError(std::string(who) + ": empty input");
}

void check_binary(std::span<const int> labels, const char* who) {
  bool pos = false, neg = false;
  for (int l : labels) {
    if (l == 1) pos = true;
    else if (l == 0) neg = true;
    else throw DomainError(std::string(who) + ": labels must be 0 or 1");
  }
  if (!pos || !neg) throw UndefinedError(std::string(who) + ": both classes are required");
}

}  // namespace

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = r;
    i = j + 1;
  }
  return ranks;
}

double auc(std::span<const double> scores, std::span<const int> labels) {
  check_lengths(scores.size(), labels.size(), "auc");
  check_binary(labels, "auc");
  for (double s : scores)
    if (!std::isfinite(s)) throw DomainError("auc: non-finite score");
  const auto ranks = average_ranks(scores);
  double pos_rank_sum = 0.0;
  double n_pos = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == 1) {
      pos_rank_sum += ranks[i];
      n_pos += 1.0;
    }
  const double n_neg = static_cast<double>(labels.size()) - n_pos;
  return (pos_rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
}

F1Result f1(std::span<const double> scores, std::span<const int> labels, double threshold) {
  check_lengths(scores.size(), labels.size(), "f1");
  check_binary(labels, "f1");
  double tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool pred = scores[i] > threshold;
    if (pred && labels[i] == 1) tp += 1;
    else if (pred) fp += 1;
    else if (labels[i] == 1) fn += 1;
  }
  F1Result r;
  if (tp == 0.0) {
    r.degenerate = (tp + fp) == 0.0;
    return r;
  }
  r.precision = tp / (tp + fp);
  r.recall = tp / (tp + fn);
  r.value = 2.0 * tp / (2.0 * tp + fp + fn);
  return r;
}

double mutual_information(std::span<const int> x, std::span<const int> y) {
  check_lengths(x.size(), y.size(), "mutual_information");
  std::map<int, std::array<double, 2>> table;
  double ny[2] = {0.0, 0.0};
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (y[i] != 0 && y[i] != 1) throw DomainError("mutual_information: y must be 0 or 1");
    auto [it, inserted] = table.try_emplace(x[i], std::array<double, 2>{0.0, 0.0});
    it->second[static_cast<std::size_t>(y[i])] += 1.0;
    ny[y[i]] += 1.0;
  }
  const double n = static_cast<double>(x.size());
  double mi = 0.0;
  for (const auto& [code, row] : table) {
    const double nx = row[0] + row[1];
    for (int b = 0; b < 2; ++b) {
      const double nxy = row[static_cast<std::size_t>(b)];
      if (nxy > 0.0) mi += (nxy / n) * std::log(nxy * n / (nx * ny[b]));
    }
  }
  return std::max(0.0, mi);
}

double spearman(std::span<const double> a, std::span<const double> b) {
  check_lengths(a.size(), b.size(), "spearman");
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) throw UndefinedError("spearman: zero-variance ranks");
  return sab / std::sqrt(saa * sbb);
}

AtKResult causality_at_k(std::span<const int> ranking, std::span<const double> truth_scores,
                         int k) {
  if (k < 1) throw DomainError("causality_at_k: k must be >= 1");
  if (ranking.empty()) throw DomainError("causality_at_k: empty ranking");
  AtKResult r;
  r.used_k = std::min<int>(k, static_cast<int>(ranking.size()));
  r.truncated = r.used_k < k;
  double s = 0.0;
  for (int i = 0; i < r.used_k; ++i) {
    const int v = ranking[static_cast<std::size_t>(i)];
    if (v < 0 || static_cast<std::size_t>(v) >= truth_scores.size())
      throw ShapeError("causality_at_k: ranking index out of range");
    s += truth_scores[static_cast<std::size_t>(v)];
  }
  r.value = s / r.used_k;
  return r;
}

Interval wilson_interval(std::int64_t successes, std::int64_t trials, double z) {
  if (trials <= 0 || successes < 0 || successes > trials)
    throw DomainError("wilson_interval: invalid counts");
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double center = (p + z2 / (2 * n)) / (1 + z2 / n);
  const double half = z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / (1 + z2 / n);
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

}  // namespace causalreg::metrics
