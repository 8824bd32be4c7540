#pragma once

// Independent reference implementations used as test oracles. Nothing here
// shares code with the library.

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <vector>

namespace causalreg::testing {

/// Unpenalized logistic regression with intercept by damped Newton.
inline Eigen::VectorXd newton_logistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                       int iters = 100) {
  const Eigen::Index n = X.rows(), m = X.cols();
  Eigen::MatrixXd A(n, m + 1);
  A << X, Eigen::VectorXd::Ones(n);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(m + 1);
  for (int it = 0; it < iters; ++it) {
    const Eigen::VectorXd z = A * theta;
    Eigen::VectorXd p(n), s(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      p(i) = 1.0 / (1.0 + std::exp(-z(i)));
      s(i) = p(i) * (1.0 - p(i));
    }
    const Eigen::VectorXd g = A.transpose() * (p - y) / static_cast<double>(n);
    const Eigen::MatrixXd H = A.transpose() * s.asDiagonal() * A / static_cast<double>(n);
    const Eigen::VectorXd step = H.ldlt().solve(g);
    theta -= step;
    if (step.norm() < 1e-14) break;
  }
  return theta;  // last entry is the intercept
}

/// Phi by Simpson integration of the standard normal density.
inline double quadrature_normal_cdf(double x) {
  const double lo = -12.0;
  if (x <= lo) return 0.0;
  const int steps = 20000;
  const double h = (x - lo) / steps;
  auto pdf = [](double t) { return std::exp(-0.5 * t * t) / std::sqrt(2.0 * M_PI); };
  double s = pdf(lo) + pdf(x);
  for (int i = 1; i < steps; ++i) s += (i % 2 ? 4.0 : 2.0) * pdf(lo + i * h);
  return s * h / 3.0;
}

/// Pairwise AUC by enumeration.
inline double brute_auc(const std::vector<double>& s, const std::vector<int>& y) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j)
      if (y[i] == 1 && y[j] == 0) {
        den += 1.0;
        num += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
      }
  return num / den;
}

inline double brute_f1(const std::vector<double>& s, const std::vector<int>& y, double t) {
  int tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const bool pred = s[i] > t;
    tp += pred && y[i] == 1;
    fp += pred && y[i] == 0;
    fn += !pred && y[i] == 1;
  }
  if (tp == 0) return 0.0;
  return 2.0 * tp / (2.0 * tp + fp + fn);
}

/// Plug-in MI from a count table.
inline double brute_mi(const std::vector<int>& x, const std::vector<int>& y) {
  std::map<std::pair<int, int>, double> pxy;
  std::map<int, double> px, py;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    pxy[{x[i], y[i]}] += 1.0 / n;
    px[x[i]] += 1.0 / n;
    py[y[i]] += 1.0 / n;
  }
  double mi = 0.0;
  for (const auto& [k, p] : pxy) mi += p * std::log(p / (px[k.first] * py[k.second]));
  return mi;
}

}  // namespace causalreg::testing
