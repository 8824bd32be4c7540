#include "causalreg/glm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "causalreg/errors.hpp"
#include "causalreg/metrics.hpp"

namespace causalreg::glm {

std::string to_string(Norm n) { return n == Norm::l1 ? "l1" : "l2"; }
std::string to_string(StepRule s) { return s == StepRule::fixed ? "fixed" : "backtracking"; }
std::string to_string(LossKind l) { return l == LossKind::logistic ? "logistic" : "squared"; }

Norm norm_from_string(const std::string& s) {
  if (s == "l1" || s == "L1") return Norm::l1;
  if (s == "l2" || s == "L2") return Norm::l2;
  throw ConfigError("unknown norm '" + s + "'");
}

void FitConfig::validate(Eigen::Index m) const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("FitConfig: lambda must be >= 0");
  if (!(tol > 0.0)) throw ConfigError("FitConfig: tol must be > 0");
  if (!(kkt_tol >= 0.0)) throw ConfigError("FitConfig: kkt_tol must be >= 0");
  if (max_iters < 1) throw ConfigError("FitConfig: max_iters must be >= 1");
  if (!weights.empty()) {
    if (static_cast<Eigen::Index>(weights.size()) != m)
      throw ShapeError("FitConfig: weights length differs from the column count");
    for (double c : weights)
      if (!(c >= 0.0) || !std::isfinite(c)) throw ConfigError("FitConfig: weights must be finite and >= 0");
  }
}

nlohmann::json FitConfig::to_json() const {
  return {{"lambda", lambda},
          {"norm", to_string(norm)},
          {"weights", weights.empty() ? nlohmann::json("uniform") : nlohmann::json(weights)},
          {"max_iters", max_iters},
          {"tol", tol},
          {"kkt_tol", kkt_tol},
          {"step_rule", to_string(step_rule)},
          {"standardize", standardize},
          {"loss", to_string(loss)},
          {"seed", seed}};
}

nlohmann::json GlmFit::to_json(const std::vector<std::string>& names) const {
  nlohmann::json coef = nlohmann::json::object();
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    const std::string key = static_cast<std::size_t>(i) < names.size()
                                ? names[static_cast<std::size_t>(i)]
                                : "x" + std::to_string(i);
    coef[key] = w(i);
  }
  return {{"coefficients", coef},
          {"intercept", b},
          {"config", config.to_json()},
          {"diagnostics",
           {{"converged", converged},
            {"iterations", iterations},
            {"nonzero_count", nonzero_count},
            {"kkt_residual", kkt_residual},
            {"stop_reason", stop_reason},
            {"final_objective",
             objective_history.empty() ? nlohmann::json(nullptr) : nlohmann::json(objective_history.back())},
            {"excluded", excluded},
            {"intercept_only", intercept_only}}}};
}

double weighted_soft_threshold(double z, double t) {
  if (t < 0.0) throw DomainError("weighted_soft_threshold: negative threshold");
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

namespace {

double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

struct Problem {
  const Eigen::MatrixXd& X;
  const Eigen::VectorXd& y;
  const FitConfig& cfg;
  Eigen::VectorXd c;  // penalty weights
  double n;

  Problem(const Eigen::MatrixXd& X_, const Eigen::VectorXd& y_, const FitConfig& cfg_)
      : X(X_), y(y_), cfg(cfg_), n(static_cast<double>(X_.rows())) {
    if (cfg.weights.empty()) c = Eigen::VectorXd::Ones(X.cols());
    else c = Eigen::Map<const Eigen::VectorXd>(cfg.weights.data(), X.cols());
  }

  // Mean loss given the linear predictor.
  double loss(const Eigen::VectorXd& eta) const {
    double s = 0.0;
    if (cfg.loss == LossKind::logistic) {
      for (Eigen::Index j = 0; j < eta.size(); ++j) s += softplus(eta(j)) - y(j) * eta(j);
    } else {
      s = 0.5 * (y - eta).squaredNorm();
    }
    return s / n;
  }

  // d(mean loss)/d(eta) * n
  Eigen::VectorXd residual(const Eigen::VectorXd& eta) const {
    if (cfg.loss == LossKind::logistic)
      return eta.unaryExpr([](double z) { return sigmoid(z); }) - y;
    return eta - y;
  }

  double smooth(const Eigen::VectorXd& w, const Eigen::VectorXd& eta) const {
    double f = loss(eta);
    if (cfg.norm == Norm::l2) f += cfg.lambda * (c.array() * w.array().square()).sum();
    return f;
  }

  double nonsmooth(const Eigen::VectorXd& w) const {
    return cfg.norm == Norm::l1 ? cfg.lambda * (c.array() * w.array().abs()).sum() : 0.0;
  }

  void gradient(const Eigen::VectorXd& w, const Eigen::VectorXd& eta, Eigen::VectorXd& gw,
                double& gb) const {
    const Eigen::VectorXd r = residual(eta);
    gw = X.transpose() * r / n;
    gb = r.sum() / n;
    if (cfg.norm == Norm::l2) gw.array() += 2.0 * cfg.lambda * c.array() * w.array();
  }

  Eigen::VectorXd prox(const Eigen::VectorXd& v, double step) const {
    if (cfg.norm == Norm::l2) return v;
    Eigen::VectorXd out(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i)
      out(i) = weighted_soft_threshold(v(i), step * cfg.lambda * c(i));
    return out;
  }

  double kkt(const Eigen::VectorXd& w, double b) const {
    const Eigen::VectorXd eta = (X * w).array() + b;
    Eigen::VectorXd gw;
    double gb;
    gradient(w, eta, gw, gb);
    double r = std::abs(gb);
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      double v;
      if (cfg.norm == Norm::l2) {
        v = std::abs(gw(i));
      } else {
        const double t = cfg.lambda * c(i);
        if (w(i) != 0.0) v = std::abs(gw(i) + t * (w(i) > 0 ? 1.0 : -1.0));
        else v = std::max(0.0, std::abs(gw(i)) - t);
      }
      r = std::max(r, v);
    }
    return r;
  }

  // Upper estimate of the Lipschitz constant of the smooth gradient.
  double lipschitz() const {
    const Eigen::Index m = X.cols();
    Eigen::VectorXd v = Eigen::VectorXd::Ones(m + 1);
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) += 0.01 * static_cast<double>(i % 7);
    double ev = 0.0;
    for (int it = 0; it < 60; ++it) {
      v.normalize();
      const Eigen::VectorXd u = (X * v.head(m)).array() + v(m);
      Eigen::VectorXd nv(m + 1);
      nv.head(m) = X.transpose() * u;
      nv(m) = u.sum();
      ev = nv.norm();
      if (ev == 0.0) break;
      v = nv;
    }
    double L = 1.05 * ev / n * (cfg.loss == LossKind::logistic ? 0.25 : 1.0);
    if (cfg.norm == Norm::l2) L += 2.0 * cfg.lambda * (c.size() ? c.maxCoeff() : 0.0);
    return std::max(L, 1e-12);
  }
};

GlmFit fit_raw(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const FitConfig& cfg,
               const GlmFit* warm) {
  const Problem P(X, y, cfg);
  const Eigen::Index m = X.cols();

  Eigen::VectorXd w = Eigen::VectorXd::Zero(m);
  double b = 0.0;
  if (warm && warm->w.size() == m) {
    w = warm->w;
    b = warm->b;
  } else if (cfg.loss == LossKind::logistic) {
    const double ybar = std::clamp(y.mean(), 1e-6, 1.0 - 1e-6);
    b = std::log(ybar / (1.0 - ybar));
  } else {
    b = y.mean();
  }

  GlmFit out;
  out.config = cfg;
  double step = 1.0 / P.lipschitz();

  Eigen::VectorXd eta = (X * w).array() + b;
  double F = P.smooth(w, eta) + P.nonsmooth(w);
  if (!std::isfinite(F)) throw NumericalError("glm: non-finite objective at the starting point");
  out.objective_history.push_back(F);

  Eigen::VectorXd w_prev = w, eta_prev = eta;
  double b_prev = b;
  double t = 1.0;
  int small_steps = 0;
  out.stop_reason = "max_iters";

  Eigen::VectorXd gw;
  double gb = 0.0;
  for (int it = 1; it <= cfg.max_iters; ++it) {
    out.iterations = it;
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const double mom = (t - 1.0) / t_next;

    // Two attempts: the momentum point, then (on objective increase) x itself.
    bool accepted = false;
    bool restarted = false;
    Eigen::VectorXd wz, eta_z;
    double bz = 0.0, Fz = 0.0;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      const double mu = attempt == 0 ? mom : 0.0;
      const Eigen::VectorXd wy = w + mu * (w - w_prev);
      const double by = b + mu * (b - b_prev);
      const Eigen::VectorXd eta_y = eta + mu * (eta - eta_prev);
      const double fy = P.smooth(wy, eta_y);
      P.gradient(wy, eta_y, gw, gb);
      for (int bt = 0; bt < 60; ++bt) {
        wz = P.prox(wy - step * gw, step);
        bz = by - step * gb;
        eta_z = (X * wz).array() + bz;
        const double fz = P.smooth(wz, eta_z);
        if (cfg.step_rule == StepRule::fixed) {
          Fz = fz + P.nonsmooth(wz);
          break;
        }
        const Eigen::VectorXd dw = wz - wy;
        const double db = bz - by;
        const double model = fy + gw.dot(dw) + gb * db + (dw.squaredNorm() + db * db) / (2.0 * step);
        if (fz <= model + 1e-12 * std::abs(fy)) {
          Fz = fz + P.nonsmooth(wz);
          break;
        }
        step *= 0.5;
      }
      if (!std::isfinite(Fz)) throw NumericalError("glm: objective became non-finite");
      if (Fz <= F) {
        accepted = true;
      } else {
        restarted = true;
        w_prev = w;
        b_prev = b;
        eta_prev = eta;
      }
    }
    if (!accepted) {
      // Even the plain step failed to decrease: numerically at the optimum.
      out.converged = true;
      out.stop_reason = "stalled";
      break;
    }
    const double rel = (F - Fz) / std::max(1.0, std::abs(F));
    w_prev = std::move(w);
    b_prev = b;
    eta_prev = std::move(eta);
    w = std::move(wz);
    b = bz;
    eta = std::move(eta_z);
    F = Fz;
    t = restarted ? 1.0 : t_next;
    out.objective_history.push_back(F);

    small_steps = rel < cfg.tol ? small_steps + 1 : 0;
    if (small_steps >= 2) {
      out.converged = true;
      out.stop_reason = "objective";
      break;
    }
    if (cfg.kkt_tol > 0.0 && it % 10 == 0 && P.kkt(w, b) <= cfg.kkt_tol) {
      out.converged = true;
      out.stop_reason = "kkt";
      break;
    }
  }

  out.w = w;
  out.b = b;
  out.kkt_residual = P.kkt(w, b);
  if (!out.converged && out.kkt_residual <= cfg.kkt_tol) {
    out.converged = true;
    out.stop_reason = "kkt";
  }
  out.nonzero_count = static_cast<int>((w.array() != 0.0).count());
  return out;
}

}  // namespace

double objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                 double b, const FitConfig& cfg) {
  const Problem P(X, y, cfg);
  const Eigen::VectorXd eta = (X * w).array() + b;
  return P.smooth(w, eta) + P.nonsmooth(w);
}

double kkt_residual(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                    double b, const FitConfig& cfg) {
  return Problem(X, y, cfg).kkt(w, b);
}

GlmFit fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const FitConfig& cfg,
           const GlmFit* warm) {
  cfg.validate(X.cols());
  if (X.rows() != y.size()) throw ShapeError("glm::fit: X/y row mismatch");
  if (X.rows() == 0) throw DomainError("glm::fit: no rows");
  if (!X.allFinite() || !y.allFinite()) throw DomainError("glm::fit: non-finite input");
  if (cfg.loss == LossKind::logistic && !(y.array() == 0.0 || y.array() == 1.0).all())
    throw DomainError("glm::fit: logistic labels must be 0 or 1");

  if (!cfg.standardize) return fit_raw(X, y, cfg, warm);

  // Fit on centered, unit-variance columns and map the solution back.
  const Eigen::RowVectorXd mean = X.colwise().mean();
  Eigen::RowVectorXd sd = ((X.rowwise() - mean).array().square().colwise().sum() /
                           static_cast<double>(X.rows()))
                              .sqrt();
  for (Eigen::Index j = 0; j < sd.size(); ++j)
    if (sd(j) == 0.0) sd(j) = 1.0;
  const Eigen::MatrixXd Z = (X.rowwise() - mean).array().rowwise() / sd.array();
  GlmFit warm_std;
  const GlmFit* warm_ptr = nullptr;
  if (warm && warm->w.size() == X.cols()) {
    warm_std = *warm;
    warm_std.w = warm->w.array() * sd.transpose().array();
    warm_std.b = warm->b + mean.dot(warm->w);
    warm_ptr = &warm_std;
  }
  GlmFit f = fit_raw(Z, y, cfg, warm_ptr);
  f.w = f.w.array() / sd.transpose().array();
  f.b -= mean.dot(f.w);
  return f;
}

GlmFit fit_causal_logistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const FitConfig& cfg) {
  if (static_cast<Eigen::Index>(cfg.weights.size()) != X.cols())
    throw ShapeError("fit_causal_logistic: weights length differs from the column count");
  return fit(X, y, cfg);
}

GlmFit fit_l1(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const FitConfig& cfg) {
  FitConfig c = cfg;
  c.norm = Norm::l1;
  c.weights.clear();
  return fit(X, y, c);
}

GlmFit fit_two_step(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const std::vector<double>& c,
                    double cutoff, const FitConfig& cfg) {
  if (static_cast<Eigen::Index>(c.size()) != X.cols())
    throw ShapeError("fit_two_step: score length differs from the column count");
  std::vector<int> kept, excluded;
  for (std::size_t i = 0; i < c.size(); ++i) (c[i] > cutoff ? excluded : kept).push_back(static_cast<int>(i));

  FitConfig sub = cfg;
  sub.norm = Norm::l1;
  sub.weights.clear();
  GlmFit out;
  if (kept.empty()) {
    sub.lambda = 0.0;
    out = fit(Eigen::MatrixXd(X.rows(), 0), y, sub);
    out.intercept_only = true;
  } else {
    Eigen::MatrixXd Xk(X.rows(), static_cast<Eigen::Index>(kept.size()));
    for (std::size_t k = 0; k < kept.size(); ++k) Xk.col(static_cast<Eigen::Index>(k)) = X.col(kept[k]);
    out = fit(Xk, y, sub);
  }
  Eigen::VectorXd w = Eigen::VectorXd::Zero(X.cols());
  for (std::size_t k = 0; k < kept.size(); ++k) w(kept[k]) = out.w(static_cast<Eigen::Index>(k));
  out.w = std::move(w);
  out.excluded = std::move(excluded);
  out.config = cfg;
  out.config.norm = Norm::l1;
  out.nonzero_count = static_cast<int>((out.w.array() != 0.0).count());
  return out;
}

std::vector<double> harden_scores(const std::vector<double>& c, double eps, double cutoff) {
  if (!(eps > 0.0 && eps < 0.5)) throw DomainError("harden_scores: eps must lie in (0, 1/2)");
  std::vector<double> out;
  out.reserve(c.size());
  for (double v : c) out.push_back(v <= cutoff ? eps : 1.0 - eps);
  return out;
}

Eigen::VectorXd predict(const GlmFit& fit, const Eigen::MatrixXd& X) {
  if (X.cols() != fit.w.size()) throw ShapeError("predict: column count differs from the fit");
  const Eigen::VectorXd eta = (X * fit.w).array() + fit.b;
  if (fit.config.loss == LossKind::squared) return eta;
  return eta.unaryExpr([](double z) { return sigmoid(z); });
}

std::vector<double> log_grid(double lo, double hi, int n) {
  if (!(lo > 0.0 && hi >= lo) || n < 1) throw ConfigError("log_grid: need 0 < lo <= hi and n >= 1");
  std::vector<double> g(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double f = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
    g[static_cast<std::size_t>(i)] = std::exp(std::log(lo) + f * (std::log(hi) - std::log(lo)));
  }
  return g;
}

PathResult regularization_path(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                               const std::vector<double>& lambda_grid, const FitConfig& base,
                               const Eigen::MatrixXd* X_valid, const Eigen::VectorXd* y_valid) {
  if (!std::is_sorted(lambda_grid.begin(), lambda_grid.end()))
    throw ConfigError("regularization_path: grid must be ascending");
  PathResult res;
  res.points.reserve(lambda_grid.size());
  const GlmFit* warm = nullptr;
  for (double lambda : lambda_grid) {
    FitConfig cfg = base;
    cfg.lambda = lambda;
    PathPoint pt;
    pt.lambda = lambda;
    pt.fit = fit(X, y, cfg, warm);
    pt.nonzero_count = pt.fit.nonzero_count;
    if (X_valid && y_valid) {
      const Eigen::VectorXd p = predict(pt.fit, *X_valid);
      std::vector<int> labels(static_cast<std::size_t>(y_valid->size()));
      for (Eigen::Index i = 0; i < y_valid->size(); ++i) labels[static_cast<std::size_t>(i)] = (*y_valid)(i) > 0.5;
      try {
        pt.heldout_auc = metrics::auc(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())), labels);
      } catch (const UndefinedError&) {
        pt.heldout_auc.reset();
      }
    }
    if (!res.points.empty() && pt.nonzero_count > res.points.back().nonzero_count)
      res.sparsity_monotone = false;
    res.points.push_back(std::move(pt));
    warm = &res.points.back().fit;
  }
  return res;
}

}  // namespace causalreg::glm
