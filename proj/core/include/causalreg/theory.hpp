#pragma once

// Two-variable orthonormal-design model y = b1 x1 + b2 x2 + noise, where x1
// is causal and x2 is not. Closed-form probability that a diagonally
// penalized least-squares estimate ranks the causal coefficient first, and
// a Monte Carlo check of it.

#include <Eigen/Dense>
#include <cstdint>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "causalreg/random.hpp"

namespace causalreg::theory {

enum class Noise { gaussian, laplace };
enum class Estimator { causal, ridge };

std::string to_string(Noise n);
std::string to_string(Estimator e);
Noise noise_from_string(const std::string& s);

struct TheoremConfig {
  int n = 500;
  double gamma = 1.0;
  double beta1 = 1.0;
  double beta2 = 0.8;
  double lambda = 1.0;
  /// Detector error: P[x1 causes] = 1 - epsilon, P[x2 causes] = epsilon.
  double epsilon = 0.1;
  Noise noise = Noise::gaussian;
  int trials = 10000;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
};

struct DiagPenalty {
  double d1 = 1.0;
  double d2 = 1.0;

  /// 1 / (1 + lambda d_k), in (0, 1].
  double shrink1(double lambda) const { return 1.0 / (1.0 + lambda * d1); }
  double shrink2(double lambda) const { return 1.0 / (1.0 + lambda * d2); }

  static DiagPenalty ridge() { return {1.0, 1.0}; }
  static DiagPenalty causal(double epsilon) { return {epsilon, 1.0 - epsilon}; }
  static DiagPenalty of(Estimator e, double epsilon);
};

double std_normal_cdf(double x);

/// Phi(sqrt(n)/gamma * ((1+lambda d2) b1 - (1+lambda d1) b2) / sqrt((1+lambda d1)^2 + (1+lambda d2)^2)).
double accuracy_closed_form(const TheoremConfig& cfg, const DiagPenalty& d);
double causal_accuracy_closed_form(const TheoremConfig& cfg, Estimator which);

/// lambda -> infinity limit of the causal estimator's accuracy.
double closed_form_limit_lambda_inf(const TheoremConfig& cfg);

/// n x 2 with X^T X = n I: Gram-Schmidt on Gaussian columns, scaled by sqrt(n).
Eigen::MatrixXd orthonormal_design(Rng& rng, int n);

/// max |X^T X - n I|.
double design_residual(const Eigen::MatrixXd& X);

/// Minimizer of (1/n)||y - X b||^2 + lambda b^T D b for an orthonormal design:
/// diag(1/(1+lambda d_k)) (1/n) X^T y. Throws DomainError when X^T X != n I.
Eigen::Vector2d shrinkage_estimate(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                   const DiagPenalty& d, double lambda, double tol = 1e-8);

struct MonteCarlo {
  double empirical = 0.0;
  /// sqrt(p (1 - p) / trials) at the empirical p.
  double se = 0.0;
  int trials = 0;
  int hits = 0;
};

/// Trial t uses stream_rng(seed, t): fresh design, noise of sd gamma,
/// count of trials with estimate_1 > estimate_2.
MonteCarlo simulate_causal_accuracy(const TheoremConfig& cfg, Estimator which);

struct SweepRow {
  TheoremConfig cfg;
  Estimator which = Estimator::causal;
  double closed_form = 0.0;
  MonteCarlo mc;
  /// |empirical - closed_form| / sqrt(p (1-p) / trials) at p = closed_form.
  double z = 0.0;
  bool pass = false;
};

/// |empirical - closed form| <= k_se binomial standard errors taken at the
/// closed-form probability (falls back to one hit's width when p is 0 or 1).
SweepRow check_cell(const TheoremConfig& cfg, Estimator which, double k_se = 3.0);

std::vector<SweepRow> sweep(const TheoremConfig& base, const std::vector<int>& ns,
                            const std::vector<double>& lambdas, const std::vector<double>& epsilons,
                            Estimator which, double k_se = 3.0);

}  // namespace causalreg::theory
