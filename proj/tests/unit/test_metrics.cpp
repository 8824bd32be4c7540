#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "causalreg/errors.hpp"
#include "causalreg/metrics.hpp"
#include "causalreg/random.hpp"
#include "oracles.hpp"

using namespace causalreg;
using causalreg::testing::brute_auc;
using causalreg::testing::brute_f1;
using causalreg::testing::brute_mi;

TEST(Auc, WorkedExample) {
  std::vector<double> s = {0.1, 0.4, 0.35, 0.8};
  std::vector<int> y = {0, 0, 1, 1};
  EXPECT_DOUBLE_EQ(metrics::auc(s, y), 0.75);
}

TEST(Auc, SeparatingAndTied) {
  std::vector<int> y = {0, 1, 0, 1};
  EXPECT_DOUBLE_EQ(metrics::auc(std::vector<double>{0, 1, 0, 1}, y), 1.0);
  EXPECT_DOUBLE_EQ(metrics::auc(std::vector<double>{3, 3, 3, 3}, y), 0.5);
}

TEST(Auc, SingleClassIsUndefined) {
  EXPECT_THROW(metrics::auc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}), UndefinedError);
}

TEST(Auc, MonotoneTransformInvariance) {
  Rng rng = stream_rng(3, 0);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> s(30), t(30);
    std::vector<int> y(30);
    for (int i = 0; i < 30; ++i) {
      s[i] = std::round(standard_normal(rng) * 4) / 4;  // ties
      t[i] = std::exp(3 * s[i]) + 7;
      y[i] = i % 3 == 0;
    }
    EXPECT_DOUBLE_EQ(metrics::auc(s, y), metrics::auc(t, y));
  }
}

TEST(F1, Conventions) {
  std::vector<int> y = {0, 1, 0, 1};
  EXPECT_DOUBLE_EQ(metrics::f1(std::vector<double>{0, 1, 0, 1}, y).value, 1.0);
  EXPECT_NEAR(metrics::f1(std::vector<double>{1, 1, 1, 1}, y).value, 2.0 / 3.0, 1e-15);
  const auto none = metrics::f1(std::vector<double>{0, 0, 0, 0}, y);
  EXPECT_EQ(none.value, 0.0);
  EXPECT_THROW(metrics::f1(std::vector<double>{0.9, 0.9}, std::vector<int>{0, 0}), UndefinedError);
}

TEST(MutualInformation, Examples) {
  EXPECT_EQ(metrics::mutual_information(std::vector<int>{4, 4, 4, 4}, std::vector<int>{0, 1, 0, 1}), 0.0);
  EXPECT_NEAR(metrics::mutual_information(std::vector<int>{0, 1, 0, 1}, std::vector<int>{0, 1, 0, 1}),
              std::log(2.0), 1e-15);
  // {(0,0),(0,0),(1,1),(1,0)}: p(0,0)=1/2, p(1,0)=1/4, p(1,1)=1/4, p(x)=1/2, p(y=0)=3/4
  const double hand = 0.5 * std::log(0.5 / (0.5 * 0.75)) + 0.25 * std::log(0.25 / (0.5 * 0.75)) +
                      0.25 * std::log(0.25 / (0.5 * 0.25));
  EXPECT_NEAR(metrics::mutual_information(std::vector<int>{0, 0, 1, 1}, std::vector<int>{0, 0, 1, 0}), hand,
              1e-15);
}

TEST(MutualInformation, NonnegativeAndZeroIffFactorized) {
  Rng rng = stream_rng(5, 0);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<int> x(12), y(12);
    for (int i = 0; i < 12; ++i) {
      x[i] = static_cast<int>(uniform01(rng) * 3);
      y[i] = uniform01(rng) < 0.5;
    }
    EXPECT_GE(metrics::mutual_information(x, y), 0.0);
  }
  // product table: x in {0,1} crossed with y in {0,1}, each cell once
  EXPECT_NEAR(metrics::mutual_information(std::vector<int>{0, 0, 1, 1}, std::vector<int>{0, 1, 0, 1}), 0.0, 1e-15);
}

TEST(Spearman, TiesAndUndefined) {
  EXPECT_NEAR(metrics::spearman(std::vector<double>{1, 2, 3, 4}, std::vector<double>{10, 20, 30, 40}), 1.0, 1e-15);
  EXPECT_NEAR(metrics::spearman(std::vector<double>{1, 2, 3, 4}, std::vector<double>{4, 3, 2, 1}), -1.0, 1e-15);
  const auto r = metrics::average_ranks(std::vector<double>{5, 1, 5, 2});
  EXPECT_EQ(r, (std::vector<double>{3.5, 1, 3.5, 2}));
  EXPECT_THROW(metrics::spearman(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}), UndefinedError);
}

TEST(CausalityAtK, Examples) {
  std::vector<double> truth = {1, 0, 1, 0, 0, 1};
  std::vector<int> best = {0, 2, 5, 1, 3, 4};
  EXPECT_DOUBLE_EQ(metrics::causality_at_k(best, truth, 3).value, 1.0);
  std::vector<int> worst = {4, 3, 1, 5, 2, 0};
  EXPECT_DOUBLE_EQ(metrics::causality_at_k(worst, truth, 3).value, 0.0);
  const auto over = metrics::causality_at_k(best, truth, 10);
  EXPECT_TRUE(over.truncated);
  EXPECT_EQ(over.used_k, 6);
  EXPECT_DOUBLE_EQ(over.value, 0.5);
  std::vector<double> possible = {0.5, 1};
  EXPECT_DOUBLE_EQ(metrics::causality_at_k(std::vector<int>{0, 1}, possible, 2).value, 0.75);
}

TEST(CausalityAtK, RandomRankingExpectation) {
  const int m = 40, k = 10;
  std::vector<double> truth(m, 0.0);
  for (int i = 0; i < 12; ++i) truth[i] = 1.0;
  std::vector<int> ranking(m);
  std::iota(ranking.begin(), ranking.end(), 0);
  Rng rng = stream_rng(9, 0);
  double mean = 0.0;
  for (int rep = 0; rep < 1000; ++rep) {
    shuffle_in_place(ranking, rng);
    mean += metrics::causality_at_k(ranking, truth, k).value / 1000.0;
  }
  EXPECT_NEAR(mean, 12.0 / m, 0.03);
}

TEST(Wilson, ContainsProportion) {
  const auto ci = metrics::wilson_interval(30, 100);
  EXPECT_LT(ci.lo, 0.3);
  EXPECT_GT(ci.hi, 0.3);
  EXPECT_GE(ci.lo, 0.0);
  EXPECT_LE(metrics::wilson_interval(100, 100).hi, 1.0);
}

// Exhaustive enumeration over every label vector and every score pattern
// drawn from a 3-level alphabet, sizes 2..6.
TEST(MetricOracles, ExhaustiveSmall) {
  const double levels[3] = {0.2, 0.5, 0.9};
  for (int n = 2; n <= 6; ++n) {
    int scores_total = 1;
    for (int i = 0; i < n; ++i) scores_total *= 3;
    for (int ymask = 0; ymask < (1 << n); ++ymask) {
      std::vector<int> y(n);
      for (int i = 0; i < n; ++i) y[i] = (ymask >> i) & 1;
      const bool both = ymask != 0 && ymask != (1 << n) - 1;
      for (int code = 0; code < scores_total; ++code) {
        std::vector<double> s(n);
        std::vector<int> x(n);
        for (int i = 0, c = code; i < n; ++i, c /= 3) {
          s[i] = levels[c % 3];
          x[i] = c % 3;
        }
        ASSERT_NEAR(metrics::mutual_information(x, y), brute_mi(x, y), 1e-12);
        if (!both) continue;
        ASSERT_NEAR(metrics::auc(s, y), brute_auc(s, y), 1e-12);
        ASSERT_NEAR(metrics::f1(s, y, 0.5).value, brute_f1(s, y, 0.5), 1e-12);
      }
    }
  }
}
