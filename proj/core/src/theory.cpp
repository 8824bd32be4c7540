#include "causalreg/theory.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "causalreg/errors.hpp"

namespace causalreg::theory {

std::string to_string(Noise n) { return n == Noise::gaussian ? "gaussian" : "laplace"; }
std::string to_string(Estimator e) { return e == Estimator::causal ? "causal" : "ridge"; }

Noise noise_from_string(const std::string& s) {
  if (s == "gaussian" || s == "normal") return Noise::gaussian;
  if (s == "laplace") return Noise::laplace;
  throw ConfigError("unknown noise '" + s + "'");
}

void TheoremConfig::validate() const {
  if (n < 2) throw ConfigError("TheoremConfig: n must be >= 2");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ConfigError("TheoremConfig: gamma must be > 0");
  if (!(beta1 >= 0.0) || !(beta2 >= 0.0)) throw ConfigError("TheoremConfig: beta1, beta2 must be >= 0");
  if (!(lambda >= 0.0) || std::isnan(lambda)) throw ConfigError("TheoremConfig: lambda must be >= 0");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("TheoremConfig: epsilon must be in [0, 1]");
  if (trials < 1) throw ConfigError("TheoremConfig: trials must be >= 1");
}

nlohmann::json TheoremConfig::to_json() const {
  return {{"n", n},
          {"gamma", gamma},
          {"beta1", beta1},
          {"beta2", beta2},
          {"lambda", lambda},
          {"epsilon", epsilon},
          {"noise", to_string(noise)},
          {"trials", trials},
          {"seed", seed}};
}

DiagPenalty DiagPenalty::of(Estimator e, double epsilon) {
  return e == Estimator::causal ? causal(epsilon) : ridge();
}

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double accuracy_closed_form(const TheoremConfig& cfg, const DiagPenalty& d) {
  cfg.validate();
  if (!(d.d1 >= 0.0) || !(d.d2 >= 0.0)) throw DomainError("accuracy_closed_form: negative penalty weight");
  const double a1 = 1.0 + cfg.lambda * d.d1;
  const double a2 = 1.0 + cfg.lambda * d.d2;
  const double num = a2 * cfg.beta1 - a1 * cfg.beta2;
  return std_normal_cdf(std::sqrt(static_cast<double>(cfg.n)) / cfg.gamma * num / std::hypot(a1, a2));
}

double causal_accuracy_closed_form(const TheoremConfig& cfg, Estimator which) {
  return accuracy_closed_form(cfg, DiagPenalty::of(which, cfg.epsilon));
}

double closed_form_limit_lambda_inf(const TheoremConfig& cfg) {
  cfg.validate();
  const double e = cfg.epsilon;
  const double num = (1.0 - e) * cfg.beta1 - e * cfg.beta2;
  return std_normal_cdf(std::sqrt(static_cast<double>(cfg.n)) / cfg.gamma * num / std::hypot(e, 1.0 - e));
}

Eigen::MatrixXd orthonormal_design(Rng& rng, int n) {
  if (n < 2) throw DomainError("orthonormal_design: n must be >= 2");
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd X(n, 2);
  for (;;) {
    for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = normal(rng);
    auto c1 = X.col(0);
    auto c2 = X.col(1);
    const double n1 = c1.norm();
    if (!(n1 > 1e-12)) continue;
    c1 /= n1;
    // twice is enough
    for (int pass = 0; pass < 2; ++pass) c2 -= c1.dot(c2) * c1;
    const double n2 = c2.norm();
    if (!(n2 > 1e-12)) continue;
    c2 /= n2;
    break;
  }
  X *= std::sqrt(static_cast<double>(n));
  return X;
}

double design_residual(const Eigen::MatrixXd& X) {
  const Eigen::MatrixXd G = X.transpose() * X;
  const double n = static_cast<double>(X.rows());
  return (G - n * Eigen::MatrixXd::Identity(G.rows(), G.cols())).cwiseAbs().maxCoeff();
}

Eigen::Vector2d shrinkage_estimate(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                   const DiagPenalty& d, double lambda, double tol) {
  if (X.cols() != 2) throw ShapeError("shrinkage_estimate: X must have 2 columns");
  if (X.rows() != y.size()) throw ShapeError("shrinkage_estimate: X and y row counts differ");
  if (!(lambda >= 0.0)) throw DomainError("shrinkage_estimate: lambda must be >= 0");
  if (!(d.d1 >= 0.0) || !(d.d2 >= 0.0)) throw DomainError("shrinkage_estimate: negative penalty weight");
  // relative to n so the check does not scale with sample size
  const double n = static_cast<double>(X.rows());
  if (!(design_residual(X) <= tol * n)) throw DomainError("shrinkage_estimate: X^T X differs from n I");
  const Eigen::Vector2d ols = X.transpose() * y / n;
  return {d.shrink1(lambda) * ols(0), d.shrink2(lambda) * ols(1)};
}

MonteCarlo simulate_causal_accuracy(const TheoremConfig& cfg, Estimator which) {
  cfg.validate();
  const DiagPenalty d = DiagPenalty::of(which, cfg.epsilon);
  const Eigen::Vector2d beta(cfg.beta1, cfg.beta2);
  // Laplace(0, s) has variance 2 s^2
  const double laplace_scale = cfg.gamma / std::numbers::sqrt2;
  MonteCarlo mc;
  mc.trials = cfg.trials;
  Eigen::VectorXd y(cfg.n);
  for (int t = 0; t < cfg.trials; ++t) {
    Rng rng = stream_rng(cfg.seed, static_cast<std::uint64_t>(t));
    const Eigen::MatrixXd X = orthonormal_design(rng, cfg.n);
    if (cfg.noise == Noise::gaussian) {
      std::normal_distribution<double> normal(0.0, cfg.gamma);
      for (int i = 0; i < cfg.n; ++i) y(i) = normal(rng);
    } else {
      for (int i = 0; i < cfg.n; ++i) {
        const double u = uniform01(rng) - 0.5;
        const double mag = -laplace_scale * std::log1p(-2.0 * std::abs(u));
        y(i) = u < 0 ? -mag : mag;
      }
    }
    y.noalias() += X * beta;
    const Eigen::Vector2d est = shrinkage_estimate(X, y, d, cfg.lambda);
    if (est(0) > est(1)) ++mc.hits;
  }
  mc.empirical = static_cast<double>(mc.hits) / cfg.trials;
  mc.se = std::sqrt(mc.empirical * (1.0 - mc.empirical) / cfg.trials);
  return mc;
}

SweepRow check_cell(const TheoremConfig& cfg, Estimator which, double k_se) {
  SweepRow row;
  row.cfg = cfg;
  row.which = which;
  row.closed_form = causal_accuracy_closed_form(cfg, which);
  row.mc = simulate_causal_accuracy(cfg, which);
  const double p = row.closed_form;
  const double se = std::sqrt(p * (1.0 - p) / cfg.trials);
  const double diff = std::abs(row.mc.empirical - p);
  if (se > 0.0) {
    row.z = diff / se;
    row.pass = row.z <= k_se;
  } else {
    row.z = diff * cfg.trials;
    row.pass = diff * cfg.trials < 1.0;
  }
  return row;
}

std::vector<SweepRow> sweep(const TheoremConfig& base, const std::vector<int>& ns,
                            const std::vector<double>& lambdas, const std::vector<double>& epsilons,
                            Estimator which, double k_se) {
  std::vector<SweepRow> rows;
  std::uint64_t cell = 0;
  for (int n : ns)
    for (double lambda : lambdas)
      for (double eps : epsilons) {
        TheoremConfig cfg = base;
        cfg.n = n;
        cfg.lambda = lambda;
        cfg.epsilon = eps;
        cfg.seed = splitmix64(base.seed + cell++);
        rows.push_back(check_cell(cfg, which, k_se));
      }
  return rows;
}

}  // namespace causalreg::theory
