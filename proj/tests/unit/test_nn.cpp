#include <gtest/gtest.h>

#include <cmath>

#include "causalreg/errors.hpp"
#include "causalreg/nn.hpp"
#include "causalreg/random.hpp"
#include "fd.hpp"

using namespace causalreg;
using namespace causalreg::nn;

namespace {

Matrix random_matrix(Rng& rng, int r, int c) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = standard_normal(rng);
  return m;
}

double ce_objective(const Network& net, const Matrix& X, const Matrix& Y) {
  return mean_loss(Loss::cross_entropy, forward(net, X, Mode::train), Y);
}

}  // namespace

TEST(Network, ShapesAndInitRange) {
  Rng rng = stream_rng(1, 0);
  const auto spec = NetSpec::mlp(5, {7, 3}, 2, Activation::relu, Activation::sigmoid);
  const auto net = Network::initialize(spec, rng);
  EXPECT_EQ(net.layers().size(), 3u);
  const double bound = std::sqrt(6.0 / (5 + 7));
  EXPECT_LE(net.layers()[0].W.cwiseAbs().maxCoeff(), bound);
  const Matrix out = forward(net, random_matrix(rng, 4, 5), Mode::infer);
  EXPECT_EQ(out.rows(), 4);
  EXPECT_EQ(out.cols(), 2);
  EXPECT_TRUE((out.array() > 0.0).all() && (out.array() < 1.0).all());
}

TEST(Network, BackpropMatchesFiniteDifferences) {
  Rng rng = stream_rng(2, 0);
  for (bool bn : {false, true}) {
    auto net = Network::initialize(NetSpec::mlp(4, {6, 5}, 1, Activation::relu, Activation::sigmoid, bn), rng);
    const Matrix X = random_matrix(rng, 9, 4);
    Matrix Y(9, 1);
    for (int i = 0; i < 9; ++i) Y(i, 0) = i % 2;
    ForwardCache cache;
    const Matrix P = forward(net, X, Mode::train, &cache);
    const Matrix up = (P - Y) / static_cast<double>(X.rows());
    const auto g = backward(net, cache, up, Upstream::final_logits);
    const double err = causalreg::testing::max_fd_relative_error(net.parameters(), g.params,
                                                      [&] { return ce_objective(net, X, Y); });
    EXPECT_LT(err, 1e-4) << "batch_norm=" << bn;
  }
}

TEST(Network, InputGradientMatchesFiniteDifferences) {
  Rng rng = stream_rng(3, 0);
  auto net = Network::initialize(NetSpec::mlp(3, {4}, 2, Activation::sigmoid, Activation::identity), rng);
  Matrix X = random_matrix(rng, 5, 3);
  const Matrix W = random_matrix(rng, 5, 2);
  ForwardCache cache;
  forward(net, X, Mode::train, &cache);
  const auto g = backward(net, cache, W);
  const double err = causalreg::testing::max_fd_relative_error(
      {&X}, {g.input}, [&] { return forward(net, X, Mode::train).cwiseProduct(W).sum(); });
  EXPECT_LT(err, 1e-6);
}

TEST(Network, StaleCacheIsRejected) {
  Rng rng = stream_rng(4, 0);
  auto net = Network::initialize(NetSpec::mlp(2, {3}, 1, Activation::relu, Activation::sigmoid), rng);
  ForwardCache cache;
  const Matrix P = forward(net, random_matrix(rng, 3, 2), Mode::train, &cache);
  net.parameters();  // counts as a modification
  EXPECT_THROW(backward(net, cache, P), ConsistencyError);
}

TEST(Network, JsonRoundTripIsExact) {
  Rng rng = stream_rng(5, 0);
  const auto net = Network::initialize(NetSpec::mlp(3, {4, 4}, 1, Activation::relu, Activation::sigmoid, true, 0.2), rng);
  const auto back = Network::from_json(net.to_json());
  const Matrix X = random_matrix(rng, 6, 3);
  EXPECT_EQ(forward(net, X, Mode::infer), forward(back, X, Mode::infer));
}

TEST(Network, DropoutOnlyInTrainMode) {
  Rng rng = stream_rng(6, 0);
  const auto net = Network::initialize(NetSpec::mlp(3, {50}, 1, Activation::relu, Activation::identity, false, 0.5), rng);
  const Matrix X = random_matrix(rng, 4, 3);
  EXPECT_EQ(forward(net, X, Mode::infer), forward(net, X, Mode::infer));
  Rng d1 = stream_rng(1, 1), d2 = stream_rng(1, 2);
  EXPECT_NE(forward(net, X, Mode::train, nullptr, &d1), forward(net, X, Mode::train, nullptr, &d2));
}

TEST(Adamax, SingleStepFormula) {
  Matrix p(1, 2);
  p << 1.0, -2.0;
  Matrix g(1, 2);
  g << 0.5, -0.25;
  AdamaxState st;
  std::vector<Matrix*> ps = {&p};
  std::vector<Matrix> gs = {g};
  adamax_step(ps, gs, st);
  // t = 1: m = 0.1 g, u = |g|, step = lr / 0.1 * m / (u + eps) = lr * sign(g) (up to eps)
  EXPECT_NEAR(p(0, 0), 1.0 - 0.002 * 0.5 / (0.5 + 1e-8), 1e-15);
  EXPECT_NEAR(p(0, 1), -2.0 + 0.002 * 0.25 / (0.25 + 1e-8), 1e-15);
  EXPECT_EQ(st.step_count, 1u);
}

TEST(Train, LearnsSeparableProblem) {
  Rng rng = stream_rng(7, 0);
  LabeledSet tr{random_matrix(rng, 400, 2), Matrix(400, 1)};
  LabeledSet va{random_matrix(rng, 100, 2), Matrix(100, 1)};
  for (auto* s : {&tr, &va})
    for (Eigen::Index i = 0; i < s->X.rows(); ++i) s->Y(i, 0) = s->X(i, 0) + s->X(i, 1) > 0;
  auto net = Network::initialize(NetSpec::mlp(2, {8}, 1, Activation::relu, Activation::sigmoid), rng);
  TrainConfig cfg;
  cfg.max_epochs = 60;
  cfg.adamax.learning_rate = 0.02;
  const auto r = train(net, tr, va, Loss::cross_entropy, cfg);
  EXPECT_GT(r.history[static_cast<std::size_t>(r.best_epoch) - 1].valid_accuracy, 0.9);
}

TEST(Tensor, RoundTripAndValidation) {
  Matrix m(2, 3);
  m << 1, 2, 3, 4, 5, 6;
  const auto t = Tensor::from_matrix(m);
  EXPECT_EQ(t.to_matrix(), m);
  Tensor bad{{2, 2}, {1, 2, 3}};
  EXPECT_THROW(bad.validate(), ShapeError);
}
