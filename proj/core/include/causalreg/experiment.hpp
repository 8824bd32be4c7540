#pragma once

// End-to-end pipeline on the semi-synthetic benchmark: generate, score every
// variable with the detector, fit LogCause / LogL1 / Two-step over a lambda
// grid, and report prediction and causality metrics.

#include <cstdint>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "causalreg/detector.hpp"
#include "causalreg/glm.hpp"
#include "causalreg/scenario.hpp"

namespace causalreg::experiment {

inline constexpr const char* kReportSchema = "report-v1";

enum class LambdaRule {
  /// Largest lambda whose validation AUC is within one standard error of the best.
  one_se,
  max_auc
};

std::string to_string(LambdaRule r);
LambdaRule lambda_rule_from_string(const std::string& s);

struct ExperimentConfig {
  scenario::BenchmarkSpec benchmark;
  /// Detector JSON; empty means train one from a fresh corpus.
  std::string detector_path;
  int detector_scenarios = 10000;
  int detector_draws = 10000;
  std::uint64_t detector_seed = 1;
  detector::DetectorConfig detector;

  std::vector<double> lambda_grid = glm::log_grid(1e-4, 1.0, 9);
  LambdaRule lambda_rule = LambdaRule::one_se;
  double two_step_cutoff = 0.5;
  double f1_threshold = 0.5;
  std::vector<int> ks = {10, 25, 50};
  double frac_train = 0.75;
  double frac_valid = 0.10;
  bool standardize = true;
  double kkt_tol = 1e-5;
  int max_iters = 5000;
  std::uint64_t split_seed = 0;
  std::string out_dir;

  void validate() const;
  nlohmann::json to_json() const;
  /// Missing keys keep their defaults; unknown keys are rejected.
  static ExperimentConfig from_json(const nlohmann::json& j);
};

struct GridPoint {
  double lambda = 0.0;
  double valid_auc = 0.0;
  double test_auc = 0.0;
  int nonzero = 0;
};

struct MethodResult {
  std::string name;
  double lambda = 0.0;
  glm::GlmFit fit;
  std::vector<GridPoint> path;
  /// Variables by decreasing |w_j| sd_j.
  std::vector<int> ranking;
  std::optional<double> valid_auc, test_auc, test_f1;
  std::map<int, double> causality_at_k;
  /// max - min test AUC over the grid.
  std::optional<double> auc_range;
  std::string error;
};

struct StageRecord {
  std::string name;
  bool ok = true;
  std::string error;
};

struct Report {
  ExperimentConfig config;
  std::vector<StageRecord> stages;
  scenario::Benchmark benchmark;
  detector::CausalWeights weights;
  detector::DetectorMetadata detector_meta;
  std::vector<double> mi;
  std::optional<double> spearman_rho;
  std::string spearman_note;
  std::vector<MethodResult> methods;  // LogCause, LogL1, TwoStep

  bool ok() const;
  const MethodResult* method(const std::string& name) const;
  nlohmann::json to_json() const;
};

/// Standardized-magnitude ranking: indices sorted by |w_j| sd_j, ties by index.
std::vector<int> rank_variables(const Eigen::VectorXd& w, const Eigen::VectorXd& sd);

/// Hanley-McNeil standard error of an AUC estimate.
double auc_standard_error(double auc, double n_pos, double n_neg);

/// Index into `valid_aucs` chosen by the rule.
std::size_t select_lambda(const std::vector<double>& valid_aucs, LambdaRule rule, double n_pos,
                          double n_neg);

/// Runs every stage; a failing stage is recorded and later stages that
/// depend on it are skipped. `model` overrides detector_path / training.
Report run_experiment(const ExperimentConfig& config, const detector::DetectorModel* model = nullptr);

/// Trains the detector the config describes on a fresh corpus.
detector::DetectorModel train_config_detector(const ExperimentConfig& config);

/// Per-variable rows: name, role, truth, c, MI, coefficients and ranks.
void write_variables_csv(const std::string& path, const Report& report);
/// lambda path rows for every method.
void write_path_csv(const std::string& path, const Report& report);

}  // namespace causalreg::experiment
