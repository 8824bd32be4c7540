#pragma once

// Minimal feedforward network engine: dense layers with optional batch
// normalization and dropout, ReLU / sigmoid / identity activations,
// hand-written backpropagation and the adamax optimizer.
//
// Batches are row-major in the mathematical sense: one example per row.

#include <Eigen/Dense>
#include <cstdint>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "causalreg/random.hpp"

namespace causalreg::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Dense n-dimensional array with row-major values.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> values;

  static Tensor from_matrix(const Matrix& m);
  Matrix to_matrix() const;  // requires a rank-2 shape
  void validate() const;     // product(shape) == size, all finite
};

enum class Activation { identity, relu, sigmoid };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

struct LayerSpec {
  int in_dim = 1;
  int out_dim = 1;
  Activation activation = Activation::identity;
  bool batch_norm = false;
  /// Probability of zeroing a unit's output in train mode (inverted dropout).
  double dropout = 0.0;
};

struct NetSpec {
  int input_dim = 1;
  std::vector<LayerSpec> layers;

  void validate() const;
  int output_dim() const { return layers.empty() ? input_dim : layers.back().out_dim; }

  /// Fully connected chain input -> hidden... -> output.
  static NetSpec mlp(int input_dim, const std::vector<int>& hidden, int output_dim,
                     Activation hidden_activation, Activation output_activation,
                     bool batch_norm = false, double dropout = 0.0);
};

/// Parameters of one dense layer. W is in_dim x out_dim, b is 1 x out_dim.
/// gamma/beta/running statistics are 1 x out_dim and only used with batch norm.
struct LayerParams {
  Matrix W;
  Matrix b;
  Matrix gamma;
  Matrix beta;
  Matrix running_mean;
  Matrix running_var;
};

constexpr double kBatchNormEpsilon = 1e-8;
constexpr double kBatchNormMomentum = 0.9;

class Network {
 public:
  Network() = default;
  Network(NetSpec spec, std::vector<LayerParams> layers);

  /// Uniform(-sqrt(6/(in+out)), +sqrt(6/(in+out))) weights, zero biases,
  /// unit gamma, zero beta.
  static Network initialize(const NetSpec& spec, Rng& rng);

  const NetSpec& spec() const { return spec_; }
  const std::vector<LayerParams>& layers() const { return layers_; }
  std::vector<LayerParams>& mutable_layers() {
    touch();
    return layers_;
  }

  /// Trainable parameters in a fixed order: per layer W, b, then gamma, beta
  /// when batch norm is on. Calling this counts as a modification.
  std::vector<Matrix*> parameters();
  std::vector<const Matrix*> parameters() const;
  std::size_t parameter_count() const;

  /// Identity of this parameter state; changes whenever parameters may change.
  std::uint64_t version() const { return version_; }
  void touch();

  nlohmann::json to_json() const;
  static Network from_json(const nlohmann::json& j);

 private:
  NetSpec spec_;
  std::vector<LayerParams> layers_;
  std::uint64_t version_ = 0;
};

enum class Mode { train, infer };

struct LayerCache {
  Matrix input;      // a_{k-1}
  Matrix pre;        // x W + b
  Matrix xhat;       // normalized pre-activation (batch norm only)
  Matrix inv_std;    // 1 x out (batch norm only)
  Matrix batch_mean; // 1 x out (batch norm only)
  Matrix batch_var;  // 1 x out (batch norm only)
  Matrix activated;  // act(bn(pre)) before dropout
  Matrix mask;       // dropout scale mask (empty when no dropout)
  Matrix output;     // after dropout
};

struct ForwardCache {
  std::vector<LayerCache> layers;
  Mode mode = Mode::infer;
  std::uint64_t version = 0;
  const Network* source = nullptr;
};

/// Runs the network on `batch` (rows = examples). In train mode batch
/// norm uses batch statistics (needs >= 2 rows) and dropout draws from
/// `dropout_rng`; in infer mode stored running statistics are used and
/// dropout is disabled. Fills `cache` when non-null.
Matrix forward(const Network& net, const Matrix& batch, Mode mode,
               ForwardCache* cache = nullptr, Rng* dropout_rng = nullptr);

/// Parameter gradients in Network::parameters() order plus dL/d(input).
struct Gradients {
  std::vector<Matrix> params;
  Matrix input;
};

/// How the upstream gradient passed to backward() is expressed.
enum class Upstream {
  output,       // dL/d(network output)
  final_logits  // dL/d(pre-activation of last layer); skips its activation
};

Gradients backward(const Network& net, const ForwardCache& cache, const Matrix& upstream,
                   Upstream kind = Upstream::output);

/// Exponential moving average update of running batch-norm statistics
/// from a train-mode cache.
void update_running_stats(Network& net, const ForwardCache& cache);

struct AdamaxParams {
  double learning_rate = 0.002;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamaxState {
  std::uint64_t step_count = 0;
  std::vector<Matrix> first_moment;
  std::vector<Matrix> inf_norm;
  AdamaxParams hyper;

  AdamaxState() = default;
  explicit AdamaxState(AdamaxParams p) : hyper(p) {}
};

/// One adamax update:
///   m <- b1 m + (1-b1) g,  u <- max(b2 u, |g|),
///   theta <- theta - lr / (1 - b1^t) * m / (u + eps).
/// Moments are lazily sized on the first call.
void adamax_step(std::span<Matrix* const> params, std::span<const Matrix> grads,
                 AdamaxState& state);

enum class Loss { cross_entropy, squared };

/// Mean loss over rows. For cross_entropy `predictions` are probabilities.
double mean_loss(Loss loss, const Matrix& predictions, const Matrix& targets);

struct TrainConfig {
  int max_epochs = 50;
  int batch_size = 64;
  int patience = 10;
  std::uint64_t seed = 0;
  AdamaxParams adamax;

  void validate() const;
};

struct LabeledSet {
  Matrix X;
  Matrix Y;  // rows x output_dim
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double valid_loss = 0.0;
  /// Fraction of correct 0.5-threshold decisions (cross entropy); for the
  /// squared loss this holds -valid_loss so that larger is always better.
  double valid_accuracy = 0.0;
};

struct TrainResult {
  Network net;
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  bool stopped_early = false;
};

/// Minibatch adamax training with early stopping on validation accuracy.
/// Returns the parameters of the best validation epoch.
TrainResult train(Network net, const LabeledSet& train_set, const LabeledSet& valid_set,
                  Loss loss, const TrainConfig& config);

double sigmoid(double z);

}  // namespace causalreg::nn
