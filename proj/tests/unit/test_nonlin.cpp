#include <gtest/gtest.h>

#include <cmath>

#include "causalreg/errors.hpp"
#include "causalreg/nonlin.hpp"
#include "fd.hpp"

using namespace causalreg;
using namespace causalreg::nonlin;

namespace {

Matrix gaussian(Rng& rng, int r, int c) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = standard_normal(rng);
  return m;
}

NonlinModel tiny_nonlin(Rng& rng, int m) {
  NonlinConfig cfg;
  cfg.q = 3;
  cfg.alpha_hidden = {5};
  cfg.dropout = 0.0;
  Vector w0(m);
  for (int i = 0; i < m; ++i) w0(i) = standard_normal(rng);
  auto model = init_nonlin(w0, 0.3, cfg, rng);
  model.beta *= 10.0;
  return model;
}

GModel tiny_g(Rng& rng, int set_size) {
  GConfig gc;
  gc.phi_hidden = {4};
  gc.phi_dim = 3;
  gc.head_hidden = {4};
  gc.set_size = set_size;
  return init_g(gc, rng);
}

}  // namespace

TEST(Nonlin, OmegaIdentityHolds) {
  Rng rng = stream_rng(1, 0);
  const auto model = tiny_nonlin(rng, 6);
  const auto out = nonlincause_forward(model, gaussian(rng, 50, 6));
  EXPECT_LT(omega_identity_residual(out), 1e-10);
  EXPECT_EQ(out.omega.rows(), 50);
  EXPECT_EQ(out.omega.cols(), 6);
}

TEST(Nonlin, GradientMatchesFiniteDifferences) {
  Rng rng = stream_rng(2, 0);
  auto model = tiny_nonlin(rng, 4);
  const Matrix X = gaussian(rng, 8, 4);
  Vector y(8);
  for (int j = 0; j < 8; ++j) y(j) = j % 2;
  const std::vector<double> c = {0.1, 0.9, 0.5, 0.3};
  const auto og = nonlin_gradients(model, X, y, c, 0.7);
  EXPECT_NEAR(og.loss, nonlin_objective(model, X, y, c, 0.7), 1e-12);
  const double err = causalreg::testing::max_fd_relative_error(model.parameters(), og.grads,
                                                    [&] { return nonlin_objective(model, X, y, c, 0.7); });
  EXPECT_LT(err, 1e-4);
}

TEST(Nonlin, ZeroPenaltyReducesToCrossEntropy) {
  Rng rng = stream_rng(3, 0);
  const auto model = tiny_nonlin(rng, 3);
  const Matrix X = gaussian(rng, 10, 3);
  Vector y(10);
  for (int j = 0; j < 10; ++j) y(j) = j % 3 == 0;
  const auto out = nonlincause_forward(model, X);
  double ce = 0.0;
  for (int j = 0; j < 10; ++j) ce -= y(j) * std::log(out.prob(j)) + (1 - y(j)) * std::log(1 - out.prob(j));
  EXPECT_NEAR(nonlin_objective(model, X, y, {1, 1, 1}, 0.0), ce / 10.0, 1e-12);
  const double pen = nonlin_objective(model, X, y, {1, 1, 1}, 0.5) - ce / 10.0;
  EXPECT_NEAR(pen, 0.5 * mean_omega_sq(model, X), 1e-12);
}

TEST(Nonlin, JsonRoundTrip) {
  Rng rng = stream_rng(4, 0);
  const auto model = tiny_nonlin(rng, 5);
  const auto back = NonlinModel::from_json(model.to_json());
  const Matrix X = gaussian(rng, 7, 5);
  EXPECT_EQ(nonlincause_forward(model, X).prob, nonlincause_forward(back, X).prob);
}

TEST(Nonlin, TrainingKeepsIdentityAndIsDeterministic) {
  InteractionSpec s;
  s.n = 1200;
  s.m = 8;
  s.seed = 3;
  const auto d = planted_interaction(s);
  const Matrix Xtr = d.X.topRows(900), Xva = d.X.bottomRows(300);
  const Vector ytr = d.y.head(900), yva = d.y.tail(300);
  NonlinConfig cfg;
  cfg.q = 4;
  cfg.alpha_hidden = {8};
  cfg.lambda = 1e-3;
  cfg.train.max_epochs = 4;
  cfg.train.patience = 4;
  const std::vector<double> c(8, 0.5);
  const auto a = train_nonlincause(Xtr, ytr, Xva, yva, c, cfg);
  const auto b = train_nonlincause(Xtr, ytr, Xva, yva, c, cfg);
  EXPECT_LT(a.max_identity_residual, 1e-10);
  EXPECT_EQ(a.model.w, b.model.w);
  EXPECT_EQ(a.model.E, b.model.E);
}

TEST(AntiCausalG, GradientMatchesFiniteDifferences) {
  Rng rng = stream_rng(5, 0);
  auto g = tiny_g(rng, 8);
  Matrix pairs(16, 2);
  for (int j = 0; j < 16; ++j) {
    pairs(j, 0) = uniform01(rng);
    pairs(j, 1) = j % 3 == 0;
  }
  Vector lab(2);
  lab << 0, 1;
  const auto gg = g_gradients(g, pairs, 2, lab);
  std::vector<Matrix*> params = g.phi.parameters();
  for (auto* p : g.head.parameters()) params.push_back(p);
  const double err =
      causalreg::testing::max_fd_relative_error(params, gg.grads, [&] { return g_gradients(g, pairs, 2, lab).loss; });
  EXPECT_LT(err, 1e-4);
}

TEST(AntiCausalG, PermutationAndDuplicationInvariant) {
  Rng rng = stream_rng(6, 0);
  const auto g = tiny_g(rng, 10);
  const Matrix S = sample_beta_set(rng, true, 10);
  Matrix P = S.colwise().reverse();
  const double a = g_score(g, S);
  EXPECT_NEAR(a, g_score(g, P), 1e-14);
  Matrix D(20, 2);
  D << S, S;
  EXPECT_NEAR(a, g_score(g, D), 1e-14);
}

TEST(AntiCausalG, BetaSetsAreWellFormed) {
  Rng rng = stream_rng(7, 0);
  for (bool anti : {false, true}) {
    const Matrix S = sample_beta_set(rng, anti, 200);
    ASSERT_EQ(S.rows(), 200);
    EXPECT_TRUE((S.col(0).array() > 0.0).all() && (S.col(0).array() < 1.0).all());
    EXPECT_TRUE(((S.col(1).array() == 0.0) || (S.col(1).array() == 1.0)).all());
  }
  double mean = 0.0;
  for (int i = 0; i < 20000; ++i) mean += beta_sample(rng, 2.0, 6.0) / 20000.0;
  EXPECT_NEAR(mean, 0.25, 0.01);
}

TEST(CauseHyp, GradientMatchesFiniteDifferences) {
  Rng rng = stream_rng(8, 0);
  const auto g = tiny_g(rng, 8);
  HypConfig hc;
  hc.k_h = 3;
  hc.h_hidden = {5};
  auto hm = init_hypothesis_model(4, hc, g, rng);
  const Matrix X = gaussian(rng, 8, 4);
  Vector y(8);
  for (int j = 0; j < 8; ++j) y(j) = j % 2;
  const auto hg = hyp_gradients(hm, X, y, 0.5, 1e-3);
  EXPECT_NEAR(hg.loss, hyp_objective(hm, X, y, 0.5, 1e-3), 1e-12);
  const double err =
      causalreg::testing::max_fd_relative_error(hm.parameters(), hg.grads, [&] { return hyp_objective(hm, X, y, 0.5, 1e-3); });
  EXPECT_LT(err, 1e-4);
}

TEST(CauseHyp, ZeroLambdaIgnoresDetector) {
  Rng rng = stream_rng(9, 0);
  const auto g1 = tiny_g(rng, 20);
  const auto g2 = tiny_g(rng, 20);
  MultiCauseSpec s;
  s.n = 600;
  s.seed = 2;
  const auto d = planted_multicause(s);
  HypConfig hc;
  hc.k_h = 4;
  hc.h_hidden = {6};
  hc.lambda = 0.0;
  hc.train.batch_size = 20;
  hc.train.max_epochs = 3;
  hc.train.patience = 3;
  const Matrix Xtr = d.X.topRows(500), Xva = d.X.bottomRows(100);
  const Vector ytr = d.y.head(500), yva = d.y.tail(100);
  const auto a = train_hypothesis_generator(Xtr, ytr, Xva, yva, g1, hc);
  const auto b = train_hypothesis_generator(Xtr, ytr, Xva, yva, g2, hc);
  EXPECT_EQ(a.model.w, b.model.w);
  EXPECT_EQ(a.model.h_net.layers()[0].W, b.model.h_net.layers()[0].W);
}

TEST(CauseHyp, ExtractionRanksAndNamesInputs) {
  Rng rng = stream_rng(10, 0);
  const auto g = tiny_g(rng, 10);
  HypConfig hc;
  hc.k_h = 6;
  hc.h_hidden = {5};
  const auto hm = init_hypothesis_model(7, hc, g, rng);
  const Matrix X = gaussian(rng, 30, 7);
  Vector y(30);
  for (int j = 0; j < 30; ++j) y(j) = j % 2;
  const auto list = extract_hypotheses(hm, X, y, 4, 3);
  ASSERT_EQ(list.items.size(), 4u);
  for (std::size_t k = 1; k < list.items.size(); ++k) EXPECT_GE(list.items[k - 1].score, list.items[k].score);
  for (const auto& h : list.items) {
    EXPECT_EQ(h.top_inputs.size(), 3u);
    EXPECT_NEAR(h.score, std::abs(h.weight) * (1.0 - h.anti_causal_score), 1e-12);
  }
  const auto j = hypotheses_to_json(list, {"a", "b", "c", "d", "e", "f", "g"});
  EXPECT_EQ(j["hypotheses"].size(), 4u);
  EXPECT_TRUE(j["hypotheses"][0]["top_inputs"][0].contains("name"));
  EXPECT_TRUE(extract_hypotheses(hm, X, y, 50).truncated);
}

TEST(Planted, RolesAndTruth) {
  MultiCauseSpec s;
  s.n = 500;
  const auto d = planted_multicause(s);
  ASSERT_EQ(d.X.cols(), 2 * s.n_pairs + s.n_anticausal + s.n_noise);
  int causal = 0;
  for (double t : d.truth) causal += t == 1.0;
  EXPECT_EQ(causal, 2 * s.n_pairs);
  Hypothesis h;
  h.top_inputs = {0, 1};
  EXPECT_EQ(hypothesis_truth(h, {1.0, 0.0, 1.0}), 0.5);
  InteractionSpec is;
  is.n = 200;
  const auto di = planted_interaction(is);
  EXPECT_EQ(di.X.cols(), is.m);
}
