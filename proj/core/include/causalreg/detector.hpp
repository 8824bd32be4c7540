#pragma once

// Bivariate causality detector: a classifier from the empirical joint of a
// count variable X and a binary Y to P[X does not cause Y].

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <functional>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <vector>

#include "causalreg/metrics.hpp"
#include "causalreg/nn.hpp"
#include "causalreg/scenario.hpp"

namespace causalreg::detector {

using scenario::Draw;
using scenario::ScenarioSample;

struct EmpiricalJoint {
  int K = scenario::kDefaultSupport;
  /// [p(1,0), ..., p(K,0), p(1,1), ..., p(K,1)]
  std::vector<double> probs;
};

EmpiricalJoint empirical_joint(std::span<const Draw> draws, int K);
EmpiricalJoint empirical_joint_from_counts(std::span<const std::uint32_t> counts, int K);

/// Fixed, parameter-free map from the 2K joint to the network input.
///   raw: the joint itself.
///   log_dependence: log p(x,y), log p(x) (offset 1e-5) followed by
///   log MI, log sum_x p(x)(p(y=1|x) - p(y=1))^2, |p(y=1) - 1/2| and the
///   same conditional spread divided by p(y=1)p(y=0).
enum class FeatureMap { raw, log_dependence };

std::string to_string(FeatureMap f);
FeatureMap feature_map_from_string(const std::string& s);
int feature_dim(FeatureMap f, int K);
Eigen::MatrixXd featurize(const Eigen::MatrixXd& joints, int K, FeatureMap f);

/// Exchanges the y=0 and y=1 halves of each row.
Eigen::MatrixXd relabel_y(const Eigen::MatrixXd& joints, int K);

struct DetectorConfig {
  std::vector<int> hidden = {128, 128, 128, 128};
  FeatureMap features = FeatureMap::log_dependence;
  /// Train on every joint and its y-relabelled copy; scores then average
  /// both orientations, so c is invariant to which outcome is coded 1.
  bool relabel_symmetric = true;
  bool batch_norm = true;
  nn::TrainConfig train = {.max_epochs = 100, .batch_size = 64, .patience = 25, .seed = 0, .adamax = {}};
  double valid_frac = 0.1;
  double heldout_frac = 0.1;
};

struct DetectorMetadata {
  std::uint64_t corpus_seed = 0;
  std::uint64_t train_seed = 0;
  double heldout_error = 0.0;
  double heldout_auc = 0.0;
  int n_train = 0;
  int n_valid = 0;
  int n_heldout = 0;
  int best_epoch = 0;
};

struct DetectorModel {
  nn::Network net;
  int K = scenario::kDefaultSupport;
  FeatureMap features = FeatureMap::raw;
  bool relabel_symmetric = false;
  DetectorMetadata meta;

  nlohmann::json to_json() const;
  static DetectorModel from_json(const nlohmann::json& j);
};

/// Splits the corpus by scenario into train / validation (early stopping) /
/// held-out, trains, and records the held-out error and AUC. Throws
/// ConfigError when the corpus holds a single label.
DetectorModel train_detector(const std::vector<ScenarioSample>& corpus, const DetectorConfig& config,
                             std::uint64_t corpus_seed = 0);

/// Rows of 2K joint vectors to scores in (0, 1).
Eigen::VectorXd score_joints(const DetectorModel& model, const Eigen::MatrixXd& joints);
double score_joint(const DetectorModel& model, const EmpiricalJoint& joint);
double score_noncausality(const DetectorModel& model, std::span<const Draw> draws);

struct CausalWeights {
  std::vector<double> c;          // P[X_i does not cause Y], one per column
  std::vector<bool> degenerate;   // column holds a single distinct value
};

/// Columns hold bin indices in [0, K-1]; each is paired with y and scored.
CausalWeights score_all(const DetectorModel& model, const Eigen::MatrixXi& X,
                        std::span<const int> y);

struct ScenarioStats {
  int n = 0;
  int errors = 0;
  double mean_score = 0.0;
};

struct DetectorEvaluation {
  double error = 0.0;
  metrics::Interval error_ci;
  double auc = 0.0;
  int n = 0;
  /// [true label][predicted label], predicted 1 when score >= 0.5.
  std::array<std::array<int, 2>, 2> confusion{};
  std::array<ScenarioStats, 10> per_scenario{};
};

/// Threshold 0.5, a score of exactly 0.5 counts as "not causal".
DetectorEvaluation evaluate_scores(std::span<const double> scores,
                                   const std::vector<ScenarioSample>& corpus);
DetectorEvaluation evaluate_detector(const DetectorModel& model,
                                     const std::vector<ScenarioSample>& corpus);

/// Spearman correlation between (1 - c_i) and the plug-in MI of (X_i, y).
double spearman_mi_check(std::span<const double> c, const Eigen::MatrixXi& X,
                         std::span<const int> y);

Eigen::MatrixXd corpus_matrix(const std::vector<ScenarioSample>& corpus);

}  // namespace causalreg::detector
