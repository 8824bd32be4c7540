#include <gtest/gtest.h>

#include <cmath>

#include "causalreg/errors.hpp"
#include "causalreg/glm.hpp"
#include "causalreg/random.hpp"
#include "oracles.hpp"

using namespace causalreg;
using namespace causalreg::glm;

namespace {

struct Problem {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
};

Problem logistic_problem(std::uint64_t seed, int n, int m) {
  Rng rng = stream_rng(seed, 0);
  Problem p{Eigen::MatrixXd(n, m), Eigen::VectorXd(n)};
  Eigen::VectorXd w(m);
  for (int i = 0; i < m; ++i) w(i) = standard_normal(rng);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < m; ++i) p.X(j, i) = standard_normal(rng);
    const double pr = 1.0 / (1.0 + std::exp(-(p.X.row(j).dot(w) + 0.3)));
    p.y(j) = uniform01(rng) < pr;
  }
  return p;
}

}  // namespace

TEST(SoftThreshold, Cases) {
  EXPECT_EQ(weighted_soft_threshold(3.0, 1.0), 2.0);
  EXPECT_EQ(weighted_soft_threshold(-3.0, 1.0), -2.0);
  EXPECT_EQ(weighted_soft_threshold(0.5, 1.0), 0.0);
}

TEST(Fit, UnpenalizedMatchesNewtonOracle) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto p = logistic_problem(s, 300, 5);
    FitConfig cfg;
    cfg.lambda = 0.0;
    cfg.tol = 1e-15;
    cfg.kkt_tol = 1e-10;
    cfg.max_iters = 100000;
    const auto f = fit(p.X, p.y, cfg);
    const auto theta = causalreg::testing::newton_logistic(p.X, p.y);
    for (int i = 0; i < 5; ++i) EXPECT_NEAR(f.w(i), theta(i), 1e-6);
    EXPECT_NEAR(f.b, theta(5), 1e-6);
  }
}

TEST(Fit, UniformWeightsEqualPlainL1Exactly) {
  const auto p = logistic_problem(7, 200, 8);
  FitConfig cfg;
  cfg.lambda = 0.02;
  cfg.weights.assign(8, 1.0);
  const auto a = fit_causal_logistic(p.X, p.y, cfg);
  const auto b = fit_l1(p.X, p.y, cfg);
  EXPECT_EQ(a.w, b.w);
  EXPECT_EQ(a.b, b.b);
}

TEST(Fit, KktResidualBelowToleranceAtConvergence) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto p = logistic_problem(100 + s, 250, 6);
    FitConfig cfg;
    cfg.lambda = 0.01 * (s + 1);
    cfg.weights = {0.1, 0.9, 0.5, 0.2, 1.0, 0.7};
    cfg.kkt_tol = 1e-7;
    cfg.tol = 1e-15;
    cfg.max_iters = 50000;
    const auto f = fit_causal_logistic(p.X, p.y, cfg);
    ASSERT_TRUE(f.converged);
    EXPECT_LE(kkt_residual(p.X, p.y, f.w, f.b, cfg), 1e-7);
    EXPECT_NEAR(f.kkt_residual, kkt_residual(p.X, p.y, f.w, f.b, cfg), 1e-12);
  }
}

TEST(Fit, HugeWeightForcesZero) {
  const auto p = logistic_problem(8, 200, 4);
  FitConfig cfg;
  cfg.lambda = 0.05;
  cfg.weights = {0.0, 1e6, 0.0, 0.0};
  const auto f = fit_causal_logistic(p.X, p.y, cfg);
  EXPECT_EQ(f.w(1), 0.0);
  EXPECT_NE(f.w(0), 0.0);
}

TEST(Fit, RidgeSquaredLossMatchesNormalEquations) {
  Rng rng = stream_rng(9, 0);
  const int n = 120, m = 4;
  Eigen::MatrixXd X(n, m);
  Eigen::VectorXd y(n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < m; ++i) X(j, i) = standard_normal(rng);
    y(j) = X(j, 0) - 0.5 * X(j, 2) + 0.3 * standard_normal(rng);
  }
  X = X.rowwise() - X.colwise().mean();
  y = y.array() - y.mean();
  FitConfig cfg;
  cfg.loss = LossKind::squared;
  cfg.norm = Norm::l2;
  cfg.lambda = 0.3;
  cfg.weights = {0.2, 0.5, 1.0, 0.8};
  cfg.tol = 1e-15;
  cfg.kkt_tol = 1e-11;
  cfg.max_iters = 100000;
  const auto f = fit(X, y, cfg);
  Eigen::MatrixXd A = X.transpose() * X / n;
  for (int i = 0; i < m; ++i) A(i, i) += 2.0 * cfg.lambda * cfg.weights[static_cast<std::size_t>(i)];
  const Eigen::VectorXd w = A.ldlt().solve(X.transpose() * y / n);
  for (int i = 0; i < m; ++i) EXPECT_NEAR(f.w(i), w(i), 1e-8);
  EXPECT_NEAR(f.b, 0.0, 1e-8);
}

TEST(TwoStep, ExcludedAreZeroAndAllExcludedIsInterceptOnly) {
  const auto p = logistic_problem(10, 200, 5);
  FitConfig cfg;
  cfg.lambda = 0.01;
  const auto f = fit_two_step(p.X, p.y, {0.1, 0.9, 0.2, 0.6, 0.4}, 0.5, cfg);
  EXPECT_EQ(f.excluded, (std::vector<int>{1, 3}));
  EXPECT_EQ(f.w(1), 0.0);
  EXPECT_EQ(f.w(3), 0.0);
  const auto none = fit_two_step(p.X, p.y, std::vector<double>(5, 0.9), 0.5, cfg);
  EXPECT_TRUE(none.intercept_only);
  EXPECT_EQ(none.w.cwiseAbs().sum(), 0.0);
  EXPECT_NEAR(1.0 / (1.0 + std::exp(-none.b)), p.y.mean(), 1e-6);
}

TEST(HardenScores, Values) {
  const auto h = harden_scores({0.1, 0.5, 0.51, 0.99}, 1e-3);
  EXPECT_EQ(h, (std::vector<double>{1e-3, 1e-3, 1.0 - 1e-3, 1.0 - 1e-3}));
}

TEST(Path, WarmStartedSparsityAndAuc) {
  const auto p = logistic_problem(11, 400, 10);
  const auto v = logistic_problem(12, 200, 10);
  FitConfig cfg;
  const auto grid = log_grid(1e-3, 0.3, 6);
  ASSERT_EQ(grid.size(), 6u);
  EXPECT_NEAR(grid.front(), 1e-3, 1e-15);
  EXPECT_NEAR(grid.back(), 0.3, 1e-12);
  const auto path = regularization_path(p.X, p.y, grid, cfg, &v.X, &v.y);
  ASSERT_EQ(path.points.size(), 6u);
  for (const auto& pt : path.points) ASSERT_TRUE(pt.heldout_auc.has_value());
  EXPECT_LE(path.points.back().nonzero_count, path.points.front().nonzero_count);
}

TEST(FitConfig, Validation) {
  FitConfig cfg;
  cfg.lambda = -1.0;
  EXPECT_THROW(cfg.validate(3), ConfigError);
  cfg.lambda = 1.0;
  cfg.weights = {1.0, 1.0};
  EXPECT_THROW(cfg.validate(3), ShapeError);
  cfg.weights = {1.0, -1.0, 1.0};
  EXPECT_THROW(cfg.validate(3), ConfigError);
}

TEST(Fit, StandardizedFitIsScaleEquivariant) {
  auto p = logistic_problem(13, 300, 3);
  FitConfig cfg;
  cfg.lambda = 0.01;
  cfg.standardize = true;
  cfg.tol = 1e-15;
  cfg.kkt_tol = 1e-10;
  cfg.max_iters = 100000;
  const auto a = fit(p.X, p.y, cfg);
  Eigen::MatrixXd Xs = p.X;
  Xs.col(1) *= 10.0;
  const auto b = fit(Xs, p.y, cfg);
  EXPECT_NEAR(a.w(1), 10.0 * b.w(1), 1e-6);
  EXPECT_NEAR(a.w(0), b.w(0), 1e-6);
}
