#include <gtest/gtest.h>

#include <numeric>

#include "causalreg/detector.hpp"
#include "causalreg/errors.hpp"
#include "fd.hpp"

using namespace causalreg;
using namespace causalreg::detector;

namespace {

const DetectorModel& small_model() {
  static const DetectorModel model = [] {
    Rng rng = stream_rng(21, 0);
    scenario::ScenarioOptions opts;
    opts.keep_draws = false;
    const auto corpus = scenario::generate_detector_corpus(rng, 30, 16, 2000, opts);
    DetectorConfig cfg;
    cfg.hidden = {16, 16};
    cfg.train.max_epochs = 5;
    cfg.train.patience = 5;
    return train_detector(corpus, cfg, 21);
  }();
  return model;
}

}  // namespace

TEST(EmpiricalJoint, FromDrawsAndCountsAgree) {
  std::vector<scenario::Draw> draws = {{1, 0}, {2, 1}, {2, 1}, {4, 0}};
  const auto a = empirical_joint(draws, 4);
  std::vector<std::uint32_t> counts = {1, 0, 0, 1, 0, 2, 0, 0};
  const auto b = empirical_joint_from_counts(counts, 4);
  EXPECT_EQ(a.probs, b.probs);
  EXPECT_DOUBLE_EQ(a.probs[scenario::joint_index(2, 1, 4)], 0.5);
  EXPECT_NEAR(std::accumulate(a.probs.begin(), a.probs.end(), 0.0), 1.0, 1e-15);
}

TEST(Featurize, DimensionsAndRelabelInvolution) {
  Rng rng = stream_rng(1, 0);
  const auto s = scenario::sample_scenario(rng, scenario::ScenarioId::direct, 16, 1000);
  Eigen::MatrixXd J(1, 32);
  for (int i = 0; i < 32; ++i) J(0, i) = s.joint[static_cast<std::size_t>(i)];
  EXPECT_EQ(featurize(J, 16, FeatureMap::raw).cols(), feature_dim(FeatureMap::raw, 16));
  EXPECT_EQ(featurize(J, 16, FeatureMap::log_dependence).cols(), feature_dim(FeatureMap::log_dependence, 16));
  EXPECT_EQ(relabel_y(relabel_y(J, 16), 16), J);
  EXPECT_EQ(feature_map_from_string(to_string(FeatureMap::log_dependence)), FeatureMap::log_dependence);
}

TEST(Detector, ScoresInUnitIntervalAndRelabelSymmetric) {
  const auto& model = small_model();
  ASSERT_TRUE(model.relabel_symmetric);
  Rng rng = stream_rng(2, 0);
  for (auto id : scenario::kAllScenarios) {
    const auto s = scenario::sample_scenario(rng, id, 16, 2000);
    Eigen::MatrixXd J(1, 32);
    for (int i = 0; i < 32; ++i) J(0, i) = s.joint[static_cast<std::size_t>(i)];
    const double a = score_joints(model, J)(0);
    const double b = score_joints(model, relabel_y(J, 16))(0);
    EXPECT_GT(a, 0.0);
    EXPECT_LT(a, 1.0);
    EXPECT_NEAR(a, b, 1e-12);
  }
}

TEST(Detector, JsonRoundTripPreservesScores) {
  const auto& model = small_model();
  const auto back = DetectorModel::from_json(model.to_json());
  Rng rng = stream_rng(3, 0);
  const auto s = scenario::sample_scenario(rng, scenario::ScenarioId::indirect, 16, 500);
  EXPECT_EQ(score_noncausality(model, s.draws), score_noncausality(back, s.draws));
  auto j = model.to_json();
  j["schema_version"] = "detector-v0";
  EXPECT_THROW(DetectorModel::from_json(j), ConfigError);
}

TEST(Detector, ScoreAllFlagsDegenerateColumns) {
  const auto& model = small_model();
  Eigen::MatrixXi X(6, 2);
  X << 0, 3, 0, 5, 0, 1, 0, 3, 0, 7, 0, 2;
  std::vector<int> y = {0, 1, 0, 1, 1, 0};
  const auto w = score_all(model, X, y);
  ASSERT_EQ(w.c.size(), 2u);
  EXPECT_TRUE(w.degenerate[0]);
  EXPECT_FALSE(w.degenerate[1]);
  for (double c : w.c) {
    EXPECT_GE(c, 0.0);
    EXPECT_LE(c, 1.0);
  }
}

TEST(Detector, SingleLabelCorpusRejected) {
  Rng rng = stream_rng(4, 0);
  std::vector<scenario::ScenarioSample> corpus;
  for (int i = 0; i < 20; ++i) corpus.push_back(scenario::sample_scenario(rng, scenario::ScenarioId::direct, 16, 100));
  DetectorConfig cfg;
  cfg.hidden = {4};
  EXPECT_THROW(train_detector(corpus, cfg), ConfigError);
}

TEST(Detector, EvaluationConfusionConsistent) {
  Rng rng = stream_rng(5, 0);
  scenario::ScenarioOptions opts;
  opts.keep_draws = false;
  const auto corpus = scenario::generate_detector_corpus(rng, 5, 16, 500, opts);
  const auto ev = evaluate_detector(small_model(), corpus);
  const auto& c = ev.confusion;
  EXPECT_EQ(c[0][0] + c[0][1] + c[1][0] + c[1][1], 50);
  EXPECT_NEAR(ev.error, static_cast<double>(c[0][1] + c[1][0]) / 50.0, 1e-15);
  EXPECT_LE(ev.error_ci.lo, ev.error);
  EXPECT_GE(ev.error_ci.hi, ev.error);
}

TEST(Detector, NetworkObjectiveGradientMatchesFiniteDifferences) {
  Rng rng = stream_rng(6, 0);
  const auto spec = nn::NetSpec::mlp(feature_dim(FeatureMap::log_dependence, 4), {6, 6}, 1, nn::Activation::relu,
                                     nn::Activation::sigmoid, true);
  auto net = nn::Network::initialize(spec, rng);
  scenario::ScenarioOptions opts;
  opts.keep_draws = false;
  Rng crng = stream_rng(6, 1);
  const auto corpus = scenario::generate_detector_corpus(crng, 1, 4, 300, opts);
  const Eigen::MatrixXd X = featurize(corpus_matrix(corpus), 4, FeatureMap::log_dependence);
  nn::Matrix Y(X.rows(), 1);
  for (Eigen::Index i = 0; i < X.rows(); ++i) Y(i, 0) = corpus[static_cast<std::size_t>(i)].label;
  nn::ForwardCache cache;
  const nn::Matrix P = nn::forward(net, X, nn::Mode::train, &cache);
  const auto g = nn::backward(net, cache, (P - Y) / static_cast<double>(X.rows()), nn::Upstream::final_logits);
  const double err = causalreg::testing::max_fd_relative_error(net.parameters(), g.params, [&] {
    return nn::mean_loss(nn::Loss::cross_entropy, nn::forward(net, X, nn::Mode::train), Y);
  });
  EXPECT_LT(err, 1e-4);
}

TEST(SpearmanCheck, OrientedAgainstMi) {
  Eigen::MatrixXi X(8, 3);
  X << 0, 0, 1, 1, 1, 0, 0, 0, 1, 1, 1, 0, 0, 0, 0, 1, 1, 1, 0, 1, 0, 1, 0, 1;
  std::vector<int> y = {0, 1, 0, 1, 0, 1, 0, 1};
  // column 1 equals y (high MI); giving it the lowest c should correlate positively
  const double rho = spearman_mi_check(std::vector<double>{0.5, 0.1, 0.9}, X, y);
  EXPECT_GT(rho, 0.0);
}
