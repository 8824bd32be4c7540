#pragma once

// Central finite differences over every entry of a parameter list.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

namespace causalreg::testing {

/// Largest |numeric - analytic| / max(floor, |numeric| + |analytic|). The floor keeps
/// parameters with an exactly zero gradient (biases ahead of batch norm) from
/// scoring central-difference roundoff, about 1e-10, as relative error.
template <class F>
double max_fd_relative_error(const std::vector<Eigen::MatrixXd*>& params,
                             const std::vector<Eigen::MatrixXd>& grads, F&& objective,
                             double h = 1e-6, double floor = 1e-5) {
  double worst = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    for (Eigen::Index i = 0; i < params[k]->size(); ++i) {
      double& v = params[k]->data()[i];
      const double keep = v;
      v = keep + h;
      const double fp = objective();
      v = keep - h;
      const double fm = objective();
      v = keep;
      const double num = (fp - fm) / (2.0 * h);
      const double an = grads[k].data()[i];
      worst = std::max(worst, std::abs(num - an) / std::max(floor, std::abs(num) + std::abs(an)));
    }
  }
  return worst;
}

}  // namespace causalreg::testing
