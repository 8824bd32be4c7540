#include <gtest/gtest.h>

#include <cmath>

#include "causalreg/errors.hpp"
#include "causalreg/theory.hpp"
#include "oracles.hpp"

using namespace causalreg;
using namespace causalreg::theory;

TEST(NormalCdf, MatchesQuadrature) {
  for (double x : {-6.0, -2.5, -1.0, -0.1, 0.0, 0.3, 1.7, 4.0})
    EXPECT_NEAR(std_normal_cdf(x), causalreg::testing::quadrature_normal_cdf(x), 1e-10) << x;
}

TEST(ClosedForm, HandComputedCell) {
  TheoremConfig c;
  c.n = 100;
  c.gamma = 2.0;
  c.beta1 = 1.0;
  c.beta2 = 0.5;
  c.lambda = 2.0;
  c.epsilon = 0.25;
  // d = (0.25, 0.75): (1 + 1.5) * 1 - (1 + 0.5) * 0.5 = 1.75, hypot(1.5, 2.5)
  const double arg = 10.0 / 2.0 * 1.75 / std::hypot(1.5, 2.5);
  EXPECT_NEAR(causal_accuracy_closed_form(c, Estimator::causal), causalreg::testing::quadrature_normal_cdf(arg), 1e-10);
  EXPECT_NEAR(causal_accuracy_closed_form(c, Estimator::ridge),
              causalreg::testing::quadrature_normal_cdf(10.0 / 2.0 * 3.0 * 0.5 / std::hypot(3.0, 3.0)), 1e-10);
}

TEST(ClosedForm, HalfEpsilonEqualsRidge) {
  TheoremConfig c;
  c.epsilon = 0.5;
  for (double lam : {0.0, 0.3, 5.0, 100.0}) {
    c.lambda = lam;
    EXPECT_NEAR(causal_accuracy_closed_form(c, Estimator::causal), causal_accuracy_closed_form(c, Estimator::ridge),
                1e-12);
  }
}

TEST(ClosedForm, LargeLambdaLimit) {
  TheoremConfig c;
  c.n = 50;
  c.epsilon = 0.3;
  c.lambda = 1e8;
  EXPECT_NEAR(causal_accuracy_closed_form(c, Estimator::causal), closed_form_limit_lambda_inf(c), 1e-6);
}

TEST(ClosedForm, ZeroLambdaIgnoresEpsilon) {
  TheoremConfig a, b;
  a.lambda = b.lambda = 0.0;
  a.epsilon = 0.05;
  b.epsilon = 0.45;
  EXPECT_EQ(causal_accuracy_closed_form(a, Estimator::causal), causal_accuracy_closed_form(b, Estimator::causal));
}

TEST(Design, OrthonormalAndRejectsBadDesign) {
  Rng rng = stream_rng(1, 0);
  const auto X = orthonormal_design(rng, 200);
  EXPECT_LT(design_residual(X), 1e-9);
  EXPECT_THROW(orthonormal_design(rng, 1), DomainError);
  Eigen::MatrixXd bad = X;
  bad.col(1) = bad.col(0);
  Eigen::VectorXd y = Eigen::VectorXd::Ones(200);
  EXPECT_THROW(shrinkage_estimate(bad, y, DiagPenalty::ridge(), 1.0), DomainError);
}

// Direct minimizer: solve (X^T X / n + lambda D) b = X^T y / n for a generic
// design, never using the orthonormal shortcut.
TEST(Shrinkage, MatchesDirectMinimizer) {
  Rng rng = stream_rng(2, 0);
  for (int rep = 0; rep < 20; ++rep) {
    const int n = 10 + rep;
    const auto X = orthonormal_design(rng, n);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y(i) = standard_normal(rng);
    const DiagPenalty d{uniform01(rng), uniform01(rng)};
    const double lambda = 3.0 * uniform01(rng);
    Eigen::Matrix2d A = X.transpose() * X / n;
    A(0, 0) += lambda * d.d1;
    A(1, 1) += lambda * d.d2;
    const Eigen::Vector2d direct = A.ldlt().solve(X.transpose() * y / n);
    const Eigen::Vector2d est = shrinkage_estimate(X, y, d, lambda);
    EXPECT_NEAR(est(0), direct(0), 1e-10);
    EXPECT_NEAR(est(1), direct(1), 1e-10);
  }
}

TEST(MonteCarlo, DeterministicAndWithinBand) {
  TheoremConfig c;
  c.n = 50;
  c.beta1 = 0.3;
  c.beta2 = 0.2;
  c.lambda = 1.0;
  c.epsilon = 0.2;
  c.trials = 4000;
  c.seed = 5;
  const auto a = simulate_causal_accuracy(c, Estimator::causal);
  const auto b = simulate_causal_accuracy(c, Estimator::causal);
  EXPECT_EQ(a.hits, b.hits);
  const auto row = check_cell(c, Estimator::causal, 4.0);
  EXPECT_TRUE(row.pass) << "z = " << row.z;
}

TEST(MonteCarlo, LaplaceNoiseRuns) {
  TheoremConfig c;
  c.n = 30;
  c.noise = Noise::laplace;
  c.beta1 = 0.2;
  c.beta2 = 0.1;
  c.trials = 3000;
  const auto row = check_cell(c, Estimator::causal, 4.0);
  EXPECT_GT(row.mc.empirical, 0.5);
  EXPECT_EQ(noise_from_string("laplace"), Noise::laplace);
}

TEST(Sweep, CellCountAndSeedsDiffer) {
  TheoremConfig c;
  c.trials = 200;
  const auto rows = sweep(c, {20, 40}, {0.0, 1.0}, {0.1, 0.4}, Estimator::causal);
  ASSERT_EQ(rows.size(), 8u);
  EXPECT_NE(rows[0].cfg.seed, rows[1].cfg.seed);
}

TEST(TheoremConfig, Validation) {
  TheoremConfig c;
  c.epsilon = 1.5;
  EXPECT_THROW(c.validate(), ConfigError);
  c.epsilon = 0.1;
  c.n = 1;
  EXPECT_THROW(c.validate(), ConfigError);
}
