#pragma once

// Logistic and linear regression with a coordinate-weighted penalty
//   (1/n) sum_j loss_j + lambda * sum_i c_i |w_i|      (L1)
//   (1/n) sum_j loss_j + lambda * sum_i c_i w_i^2      (L2)
// solved by accelerated proximal gradient with backtracking. The intercept
// is never penalized.

#include <Eigen/Dense>
#include <cstdint>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

namespace causalreg::glm {

enum class Norm { l1, l2 };
enum class StepRule { fixed, backtracking };
/// logistic: cross entropy on sigmoid(Xw + b); squared: (1/2)(y - Xw - b)^2.
enum class LossKind { logistic, squared };

std::string to_string(Norm n);
std::string to_string(StepRule s);
std::string to_string(LossKind l);
Norm norm_from_string(const std::string& s);

struct FitConfig {
  double lambda = 0.0;
  Norm norm = Norm::l1;
  /// Per-coordinate penalty weights c_i; empty means all ones.
  std::vector<double> weights;
  int max_iters = 5000;
  /// Stop when the relative objective decrease of an accepted step is below tol.
  double tol = 1e-8;
  /// Also stop once the optimality residual is below kkt_tol.
  double kkt_tol = 1e-6;
  StepRule step_rule = StepRule::backtracking;
  bool standardize = false;
  LossKind loss = LossKind::logistic;
  std::uint64_t seed = 0;

  void validate(Eigen::Index m) const;
  nlohmann::json to_json() const;
};

struct GlmFit {
  Eigen::VectorXd w;
  double b = 0.0;
  std::vector<double> objective_history;
  bool converged = false;
  int iterations = 0;
  int nonzero_count = 0;
  double kkt_residual = 0.0;
  std::string stop_reason;
  /// Coordinates forced to zero by the two-step selection.
  std::vector<int> excluded;
  bool intercept_only = false;
  FitConfig config;

  nlohmann::json to_json(const std::vector<std::string>& names = {}) const;
};

/// sign(z) * max(|z| - t, 0).
double weighted_soft_threshold(double z, double t);

/// Penalized objective at (w, b).
double objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                 double b, const FitConfig& cfg);

/// Max-norm violation of the first-order optimality conditions at (w, b).
double kkt_residual(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                    double b, const FitConfig& cfg);

/// General entry point; `warm` supplies the starting point.
GlmFit fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const FitConfig& cfg,
           const GlmFit* warm = nullptr);

/// Causal regularizer with weights cfg.weights = c.
GlmFit fit_causal_logistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const FitConfig& cfg);

/// Plain L1 (all c_i = 1) at the same lambda.
GlmFit fit_l1(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const FitConfig& cfg);

/// Variables with c_i > cutoff are excluded (held at zero); plain L1 on the
/// rest. All excluded gives the intercept-only fit.
GlmFit fit_two_step(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const std::vector<double>& c,
                    double cutoff, const FitConfig& cfg);

/// Scores hardened to eps (c_i <= cutoff) or 1 - eps, penalty lambda / eps.
std::vector<double> harden_scores(const std::vector<double>& c, double eps, double cutoff = 0.5);

/// sigmoid(Xw + b) for logistic fits, Xw + b for squared fits.
Eigen::VectorXd predict(const GlmFit& fit, const Eigen::MatrixXd& X);

struct PathPoint {
  double lambda = 0.0;
  GlmFit fit;
  int nonzero_count = 0;
  std::optional<double> heldout_auc;
};

struct PathResult {
  std::vector<PathPoint> points;
  /// nonzero_count never increases along the grid.
  bool sparsity_monotone = true;
};

/// Warm-started sweep over an ascending grid. Held-out AUC is filled when
/// a validation split with both classes is supplied.
PathResult regularization_path(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                               const std::vector<double>& lambda_grid, const FitConfig& base,
                               const Eigen::MatrixXd* X_valid = nullptr,
                               const Eigen::VectorXd* y_valid = nullptr);

/// n log-spaced values from lo to hi inclusive.
std::vector<double> log_grid(double lo, double hi, int n);

}  // namespace causalreg::glm
