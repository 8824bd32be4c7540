#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "causalreg/errors.hpp"
#include "causalreg/scenario.hpp"

using namespace causalreg;
using namespace causalreg::scenario;

namespace {

double total(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace

TEST(Marginals, AreDistributions) {
  Rng rng = stream_rng(1, 0);
  for (int rep = 0; rep < 500; ++rep) {
    const auto p = sample_marginal(rng, 16);
    ASSERT_EQ(p.size(), 16u);
    ASSERT_NEAR(total(p), 1.0, 1e-12);
    for (double v : p) ASSERT_GE(v, 0.0);
  }
}

TEST(Marginals, ZipfAndPoissonAreDeterministic) {
  Rng a = stream_rng(1, 0), b = stream_rng(2, 0);
  MarginalSpec z{MarginalKind::zipf, 1.5, 8};
  EXPECT_EQ(marginal_probs(z, a), marginal_probs(z, b));
  const auto pz = marginal_probs(z, a);
  EXPECT_NEAR(pz[0] / pz[1], std::pow(2.0, 1.5), 1e-12);
  MarginalSpec p{MarginalKind::poisson, 2.0, 4};
  const auto pp = marginal_probs(p, a);
  EXPECT_NEAR(pp[0], std::exp(-2.0), 1e-12);
  EXPECT_NEAR(total(pp), 1.0, 1e-12);
}

TEST(Scenarios, LabelsAndNames) {
  int causal = 0;
  for (auto id : kAllScenarios) {
    EXPECT_EQ(scenario_from_string(to_string(id)), id);
    causal += causal_label(id) == 0;
  }
  EXPECT_EQ(causal, 4);
  EXPECT_EQ(causal_label(ScenarioId::direct), 0);
  EXPECT_EQ(causal_label(ScenarioId::reverse_direct), 1);
  EXPECT_EQ(causal_label(ScenarioId::independent), 1);
}

TEST(Scenarios, JointIsDistributionAndCountsMatchDraws) {
  Rng rng = stream_rng(3, 0);
  for (auto id : kAllScenarios) {
    const auto s = sample_scenario(rng, id, 16, 500);
    ASSERT_EQ(s.joint.size(), 32u);
    EXPECT_NEAR(total(s.joint), 1.0, 1e-12);
    EXPECT_EQ(std::accumulate(s.counts.begin(), s.counts.end(), 0u), 500u);
    ASSERT_EQ(s.draws.size(), 500u);
    std::vector<std::uint32_t> recount(32, 0);
    for (const auto& d : s.draws) ++recount[joint_index(d.x, d.y, 16)];
    EXPECT_EQ(recount, s.counts);
  }
}

TEST(Scenarios, IndependentFactorizes) {
  Rng rng = stream_rng(4, 0);
  const auto f = draw_factors(rng, ScenarioId::independent, 6);
  const auto j = marginal_joint(f);
  double py1 = 0.0;
  for (int x = 1; x <= 6; ++x) py1 += j[joint_index(x, 1, 6)];
  for (int x = 1; x <= 6; ++x) {
    const double px = j[joint_index(x, 0, 6)] + j[joint_index(x, 1, 6)];
    EXPECT_NEAR(j[joint_index(x, 1, 6)], px * py1, 1e-12);
  }
}

TEST(Scenarios, SeedDeterminismAndKeepDrawsInvariance) {
  Rng a = stream_rng(9, 0), b = stream_rng(9, 0);
  ScenarioOptions lean;
  lean.keep_draws = false;
  const auto full = sample_scenario(a, ScenarioId::conf_indirect, 16, 1000);
  const auto thin = sample_scenario(b, ScenarioId::conf_indirect, 16, 1000, lean);
  EXPECT_EQ(full.counts, thin.counts);
  EXPECT_EQ(full.joint, thin.joint);
  EXPECT_TRUE(thin.draws.empty());
}

TEST(Corpus, InterleavedAndBalanced) {
  Rng rng = stream_rng(5, 0);
  ScenarioOptions opts;
  opts.keep_draws = false;
  const auto corpus = generate_detector_corpus(rng, 3, 16, 100, opts);
  ASSERT_EQ(corpus.size(), 30u);
  for (std::size_t i = 0; i < corpus.size(); ++i) EXPECT_EQ(corpus[i].scenario, kAllScenarios[i % 10]);
}

TEST(Benchmark, RolesShapesAndPrevalence) {
  BenchmarkSpec spec;
  spec.m = 50;
  spec.n = 4000;
  spec.seed = 3;
  const auto b = generate_semisynthetic_benchmark(spec);
  EXPECT_EQ(b.X.rows(), 4000);
  EXPECT_EQ(b.X.cols(), 50);
  EXPECT_GE(b.X.minCoeff(), 0);
  EXPECT_LE(b.X.maxCoeff(), 15);
  int causal = 0, confounded = 0;
  for (auto r : b.roles) {
    causal += r == VariableRole::causal;
    confounded += r == VariableRole::confounded;
  }
  EXPECT_EQ(causal, 10);
  EXPECT_EQ(confounded, 15);
  const double prev = std::accumulate(b.y.begin(), b.y.end(), 0.0) / 4000.0;
  EXPECT_NEAR(prev, 0.5, 0.05);
  const auto truth = b.causal_scores();
  const auto labels = b.noncausal_labels();
  for (std::size_t i = 0; i < truth.size(); ++i) EXPECT_EQ(truth[i], 1.0 - labels[i]);
  const auto again = generate_semisynthetic_benchmark(spec);
  EXPECT_EQ(b.X, again.X);
  EXPECT_EQ(b.y, again.y);
}

TEST(Benchmark, InvalidSpecRejected) {
  BenchmarkSpec spec;
  spec.frac_causal = 0.8;
  spec.frac_confounded = 0.5;
  EXPECT_THROW(spec.validate(), ConfigError);
}
