#pragma once

// Non-linear causally regularized models.
//
// nonlinCause: logit(x) = w^T x + beta^T (alpha(Ex) .* Ex) + b, which is
// omega(x)^T x + b with omega_i(x) = w_i + (beta .* alpha(Ex))^T E_i. The
// causal penalty acts on omega per sample.
//
// CauseHyp: a representation h(x) in (0,1)^K feeds a logistic last layer
// whose weights are penalized by a frozen batch-level anti-causality
// detector g evaluated on (h_i, y) over minibatches of 200.

#include <Eigen/Dense>
#include <cstdint>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "causalreg/glm.hpp"
#include "causalreg/nn.hpp"
#include "causalreg/random.hpp"

namespace causalreg::nonlin {

using nn::Matrix;
using nn::Vector;

// ------------------------------------------------------------ nonlinCause

struct NonlinConfig {
  int q = 16;
  std::vector<int> alpha_hidden = {32, 32};
  double dropout = 0.1;
  double lambda = 0.0;
  /// Lambda of the LogCause fit that initializes w and b.
  double init_lambda = 1e-3;
  nn::TrainConfig train = {.max_epochs = 200, .batch_size = 64, .patience = 20, .seed = 0, .adamax = {}};

  void validate() const;
  nlohmann::json to_json() const;
};

struct NonlinModel {
  Matrix w;     // m x 1
  Matrix E;     // q x m
  nn::Network alpha;  // q -> q
  Matrix beta;  // q x 1
  Matrix b;     // 1 x 1

  int m() const { return static_cast<int>(E.cols()); }
  int q() const { return static_cast<int>(E.rows()); }

  /// w, b, E, beta, then the alpha-net parameters.
  std::vector<Matrix*> parameters();
  std::vector<const Matrix*> parameters() const;

  nlohmann::json to_json() const;
  static NonlinModel from_json(const nlohmann::json& j);
};

/// Random E and alpha-net, small beta; w and b copied from the arguments.
NonlinModel init_nonlin(const Vector& w0, double b0, const NonlinConfig& cfg, Rng& rng);

struct NonlinOutput {
  Vector prob;
  Vector logit;
  /// Row j is omega(x_j).
  Matrix omega;
  /// omega(x_j)^T x_j + b, evaluated independently of `logit`.
  Vector logit_via_omega;
};

NonlinOutput nonlincause_forward(const NonlinModel& model, const Matrix& X);

/// max_j |logit_j - omega(x_j)^T x_j - b|.
double omega_identity_residual(const NonlinOutput& out);

/// (1/n) sum_j [CE_j + lambda sum_i c_i omega_i(x_j)^2], inference mode.
double nonlin_objective(const NonlinModel& model, const Matrix& X, const Vector& y,
                        const std::vector<double>& c, double lambda);

struct ObjectiveGrad {
  double loss = 0.0;
  /// Same order as parameters().
  std::vector<Matrix> grads;
};

/// Objective and exact gradient. Train mode applies alpha-net dropout from
/// `dropout_rng`.
ObjectiveGrad nonlin_gradients(const NonlinModel& model, const Matrix& X, const Vector& y,
                               const std::vector<double>& c, double lambda,
                               nn::Mode mode = nn::Mode::infer, Rng* dropout_rng = nullptr);

/// (1/n) sum_j ||omega(x_j)||^2.
double mean_omega_sq(const NonlinModel& model, const Matrix& X);

struct NonlinEpoch {
  int epoch = 0;
  double train_objective = 0.0;
  double valid_log_loss = 0.0;
  /// Training objective on the validation set (CauseHyp early stopping).
  double valid_objective = 0.0;
};

struct NonlinResult {
  NonlinModel model;
  glm::GlmFit init_fit;
  std::vector<NonlinEpoch> history;
  int best_epoch = 0;
  bool stopped_early = false;
  /// Largest omega identity residual seen on the validation set.
  double max_identity_residual = 0.0;
};

/// Adamax on minibatches with early stopping on validation log loss. Columns
/// should be on comparable scales (callers standardize). Throws
/// NumericalError when the objective becomes non-finite.
NonlinResult train_nonlincause(const Matrix& X_train, const Vector& y_train, const Matrix& X_valid,
                               const Vector& y_valid, const std::vector<double>& c,
                               const NonlinConfig& cfg);

// ------------------------------------------------------------ anti-causality detector g

/// Mean-embedding set classifier: g(S) = head(mean_{(h,y) in S} phi(h, y)),
/// output P[anti-causal].
struct GModel {
  nn::Network phi;
  nn::Network head;
  int set_size = 200;
  double heldout_error = 1.0;
  bool target_met = false;

  nlohmann::json to_json() const;
  static GModel from_json(const nlohmann::json& j);
};

struct GConfig {
  std::vector<int> phi_hidden = {32, 32};
  int phi_dim = 32;
  std::vector<int> head_hidden = {32, 32};
  int set_size = 200;
  int sets_train = 4000;
  int sets_valid = 500;
  int sets_heldout = 1000;
  /// Beta shape parameters ~ U(beta_lo, beta_hi).
  double beta_lo = 0.5;
  double beta_hi = 5.0;
  double target_error = 0.10;
  nn::TrainConfig train = {.max_epochs = 40, .batch_size = 32, .patience = 8, .seed = 0, .adamax = {}};

  void validate() const;
};

/// size x 2 rows (h, y). Causal: h ~ Beta(a, b), y ~ Bernoulli(h).
/// Anti-causal: y ~ Bernoulli(p), h | y ~ Beta(a_y, b_y).
Matrix sample_beta_set(Rng& rng, bool anticausal, int size, double lo = 0.5, double hi = 5.0);

double beta_sample(Rng& rng, double a, double b);

GModel init_g(const GConfig& cfg, Rng& rng);

/// g for each set; `pairs` stacks `sets` blocks of equal size.
Vector g_forward(const GModel& g, const Matrix& pairs, int sets);
double g_score(const GModel& g, const Matrix& pairs);

struct GTrainResult {
  GModel model;
  std::vector<nn::EpochRecord> history;
  int best_epoch = 0;
};

/// Trains on a fresh Beta corpus; heldout_error and target_met record the
/// result on an independent held-out corpus. Never throws on a missed target.
GTrainResult train_anticausal_detector_beta(const GConfig& cfg);

/// Cross entropy of g over labelled sets and its parameter gradients
/// (phi then head), used by training and the gradient checks.
ObjectiveGrad g_gradients(const GModel& g, const Matrix& pairs, int sets, const Vector& labels);

// ------------------------------------------------------------ CauseHyp

struct HypConfig {
  int k_h = 16;
  std::vector<int> h_hidden = {32};
  double lambda = 0.0;
  /// Plain L1 on the first h-net layer.
  double l1_lower = 1e-4;
  /// train.batch_size is also the g batch; 200 matches g's training sets.
  nn::TrainConfig train = {.max_epochs = 100, .batch_size = 200, .patience = 10, .seed = 0, .adamax = {}};

  void validate() const;
  nlohmann::json to_json() const;
};

struct HypothesisModel {
  nn::Network h_net;  // m -> k_h, sigmoid output
  Matrix w;           // k_h x 1
  Matrix b;           // 1 x 1
  GModel g;           // frozen

  int k_h() const { return static_cast<int>(w.rows()); }

  /// h-net parameters, then w, b. g is not included.
  std::vector<Matrix*> parameters();

  nlohmann::json to_json() const;
  static HypothesisModel from_json(const nlohmann::json& j);
};

HypothesisModel init_hypothesis_model(int m, const HypConfig& cfg, const GModel& g, Rng& rng);

/// h(x) rows and P[y = 1 | x].
struct HypOutput {
  Matrix H;
  Vector prob;
};
HypOutput hyp_forward(const HypothesisModel& model, const Matrix& X);

/// g_i evaluated on the whole batch (h_{.,i}, y) for every coordinate i.
Vector coordinate_g(const GModel& g, const Matrix& H, const Vector& y);

/// (1/n) sum_j CE_j + lambda sum_i g_i |w_i| + l1_lower ||W_1||_1 with g on
/// the whole batch. At lambda = 0 g is not evaluated.
double hyp_objective(const HypothesisModel& model, const Matrix& X, const Vector& y,
                     double lambda, double l1_lower);
ObjectiveGrad hyp_gradients(const HypothesisModel& model, const Matrix& X, const Vector& y,
                            double lambda, double l1_lower);

struct HypResult {
  HypothesisModel model;
  std::vector<NonlinEpoch> history;
  int best_epoch = 0;
  bool stopped_early = false;
  int dropped_tail_rows = 0;
};

/// Minibatches of exactly cfg.train.batch_size rows; the tail is dropped. Early
/// stopping on the validation value of the training objective.
HypResult train_hypothesis_generator(const Matrix& X_train, const Vector& y_train,
                                     const Matrix& X_valid, const Vector& y_valid,
                                     const GModel& g, const HypConfig& cfg);

struct Hypothesis {
  int coordinate = 0;
  double weight = 0.0;
  double anti_causal_score = 0.0;
  /// |weight| * (1 - anti_causal_score)
  double score = 0.0;
  std::vector<int> top_inputs;
  std::vector<double> input_influence;
};

struct HypothesisList {
  std::vector<Hypothesis> items;
  bool truncated = false;
};

/// Input -> coordinate influence |W_1| |W_2| ... (k_h columns, m rows).
Matrix input_influence(const nn::Network& h_net);

/// Coordinates ranked by |w_i| (1 - mean g_i); g is averaged over
/// consecutive batches of g.set_size rows of (X, y).
HypothesisList extract_hypotheses(const HypothesisModel& model, const Matrix& X, const Vector& y,
                                  int top_k, int n_inputs = 5);

nlohmann::json hypotheses_to_json(const HypothesisList& list,
                                  const std::vector<std::string>& names = {});

// ------------------------------------------------------------ planted benchmarks

struct PlantedData {
  Matrix X;
  Vector y;
  std::vector<std::string> names;
  /// 1 for causal inputs, 0 otherwise.
  std::vector<double> truth;
  /// "causal", "anticausal", "noise"
  std::vector<std::string> roles;
};

struct InteractionSpec {
  int n = 6000;
  int m = 20;
  int n_linear = 4;
  double interaction = 2.5;
  double linear = 0.5;
  std::uint64_t seed = 0;
};

/// Standard normal inputs; logit = interaction * x0 * x1 + linear * sum of
/// the next n_linear inputs. The remaining inputs are noise.
PlantedData planted_interaction(const InteractionSpec& spec);

struct MultiCauseSpec {
  int n = 6000;
  int n_pairs = 3;
  int n_anticausal = 6;
  int n_noise = 12;
  double base_logit = -2.0;
  double pair_effect = 6.0;
  /// Anti-causal inputs: x | y=1 ~ Beta(a, b), x | y=0 ~ Beta(b, a).
  double anticausal_a = 3.0;
  double anticausal_b = 2.0;
  std::uint64_t seed = 0;
};

/// Inputs in (0, 1). Causal inputs are U(0,1) and enter the logit of y in
/// AND-pairs through their product; anti-causal inputs are drawn from y;
/// noise inputs are U(0,1) and independent of y.
PlantedData planted_multicause(const MultiCauseSpec& spec);

/// Mean truth over a hypothesis' top inputs.
double hypothesis_truth(const Hypothesis& h, const std::vector<double>& truth);

}  // namespace causalreg::nonlin
