#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

#include "lnnbench/dataset.hpp"
#include "lnnbench/models.hpp"

namespace lnnbench {

/// Raised when the least-squares system is rank-deficient (all inputs
/// equal), as opposed to ordinary misuse.
struct DegenerateDataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Exact minimizer of the MSE over lines, via the centered covariance
/// form of the normal equations: slope = cov(x, y) / var(x),
/// intercept = mean(y) - slope * mean(x).
inline LinearParams normal_equation(const Dataset& data) {
  const std::size_t n = data.inputs.size();
  if (n < 2 || data.labels.size() != n) {
    throw std::invalid_argument("normal_equation: need at least 2 points");
  }

  double x_mean = 0.0;
  double y_mean = 0.0;
  double max_abs_x = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    x_mean += data.inputs[i];
    y_mean += data.labels[i];
    max_abs_x = std::max(max_abs_x, std::abs(data.inputs[i]));
  }
  x_mean /= static_cast<double>(n);
  y_mean /= static_cast<double>(n);

  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = data.inputs[i] - x_mean;
    sxx += dx * dx;
    sxy += dx * (data.labels[i] - y_mean);
  }

  // Constant inputs leave sxx at most the rounding noise of the
  // centering pass, which is bounded by ~ (n * eps * |x|)^2 per term.
  const double eps = std::numeric_limits<double>::epsilon();
  const double nd = static_cast<double>(n);
  const double degenerate_floor =
      nd * nd * nd * eps * eps * std::max(1.0, max_abs_x * max_abs_x);
  if (sxx <= degenerate_floor) {
    throw DegenerateDataError("normal_equation: inputs have zero variance");
  }

  const double slope = sxy / sxx;
  return {slope, y_mean - slope * x_mean};
}

/// Optimal parameter deviation D = |m - a*| + |b - b*|, the L1 distance
/// between a model's effective line and the closed-form optimum.
inline double deviation(const LinearParams& model_line,
                        const LinearParams& optimal) {
  return std::abs(model_line.slope - optimal.slope) +
         std::abs(model_line.intercept - optimal.intercept);
}

}  // namespace lnnbench
