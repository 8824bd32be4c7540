#include <benchmark/benchmark.h>

#include <vector>

#include "causalreg/glm.hpp"
#include "causalreg/metrics.hpp"
#include "causalreg/nn.hpp"
#include "causalreg/random.hpp"
#include "causalreg/theory.hpp"

using namespace causalreg;

namespace {

Eigen::MatrixXd gaussian(Rng& rng, int r, int c) {
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = standard_normal(rng);
  return m;
}

void BM_CausalLogisticFit(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0)), m = static_cast<int>(state.range(1));
  Rng rng = stream_rng(1, 0);
  const Eigen::MatrixXd X = gaussian(rng, n, m);
  Eigen::VectorXd y(n);
  for (int j = 0; j < n; ++j) y(j) = X(j, 0) - X(j, 1) + standard_normal(rng) > 0.0;
  glm::FitConfig cfg;
  cfg.lambda = 0.01;
  cfg.weights.resize(static_cast<std::size_t>(m));
  for (auto& c : cfg.weights) c = uniform01(rng);
  for (auto _ : state) benchmark::DoNotOptimize(glm::fit_causal_logistic(X, y, cfg).w.data());
}
BENCHMARK(BM_CausalLogisticFit)->Args({2000, 50})->Args({10000, 200})->Unit(benchmark::kMillisecond);

void BM_DetectorForward(benchmark::State& state) {
  Rng rng = stream_rng(2, 0);
  const auto net = nn::Network::initialize(
      nn::NetSpec::mlp(40, {128, 128, 128, 128}, 1, nn::Activation::relu, nn::Activation::sigmoid, true), rng);
  const nn::Matrix X = gaussian(rng, static_cast<int>(state.range(0)), 40);
  for (auto _ : state) benchmark::DoNotOptimize(nn::forward(net, X, nn::Mode::infer).data());
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DetectorForward)->Arg(200)->Arg(2000);

void BM_TheoremMonteCarlo(benchmark::State& state) {
  theory::TheoremConfig c;
  c.n = static_cast<int>(state.range(0));
  c.trials = 1000;
  for (auto _ : state) benchmark::DoNotOptimize(theory::simulate_causal_accuracy(c, theory::Estimator::causal).hits);
  state.SetItemsProcessed(state.iterations() * c.trials);
}
BENCHMARK(BM_TheoremMonteCarlo)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_Auc(benchmark::State& state) {
  Rng rng = stream_rng(3, 0);
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<double> s(n);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = uniform01(rng) < 0.4;
    s[i] = standard_normal(rng) + y[i];
  }
  for (auto _ : state) benchmark::DoNotOptimize(metrics::auc(s, y));
}
BENCHMARK(BM_Auc)->Arg(1000)->Arg(100000);

}  // namespace
BENCHMARK_MAIN();
