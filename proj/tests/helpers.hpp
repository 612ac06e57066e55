#pragma once

// Test-only utilities. The finite-difference and recomputation helpers
// here are the independent oracles the suites check the library
// against; they must stay free of the library's gradient code paths.

#include <cmath>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "lnnbench/models.hpp"

namespace lnnbench::testing {

inline bool close(double a, double b, double rel, double abs_tol) {
  return std::abs(a - b) <=
         std::max(abs_tol, rel * std::max(std::abs(a), std::abs(b)));
}

/// Central finite differences (f(x+h) - f(x-h)) / 2h per coordinate.
template <typename F>
std::vector<double> central_differences(F&& f, std::vector<double> at,
                                        double step) {
  std::vector<double> grads(at.size());
  for (std::size_t j = 0; j < at.size(); ++j) {
    const double original = at[j];
    at[j] = original + step;
    const double up = f(at);
    at[j] = original - step;
    const double down = f(at);
    at[j] = original;
    grads[j] = (up - down) / (2.0 * step);
  }
  return grads;
}

inline std::vector<double> flatten(const LnnParams& params) {
  std::vector<double> flat;
  flat.reserve(2 * params.depth());
  for (const AffineLayer& layer : params.layers) {
    flat.push_back(layer.weight);
    flat.push_back(layer.bias);
  }
  return flat;
}

inline LnnParams unflatten(std::span<const double> flat) {
  if (flat.size() % 2 != 0 || flat.empty()) {
    throw std::invalid_argument("unflatten: bad parameter count");
  }
  LnnParams params;
  params.layers.resize(flat.size() / 2);
  for (std::size_t k = 0; k < params.layers.size(); ++k) {
    params.layers[k].weight = flat[2 * k];
    params.layers[k].bias = flat[2 * k + 1];
  }
  return params;
}

/// Random depth-layer chain whose collapse equals `target` up to
/// rounding: weights multiply to the slope, biases telescope to the
/// intercept.
inline LnnParams factorize_line(const LinearParams& target, int depth,
                                std::mt19937_64& rng) {
  std::uniform_real_distribution<double> magnitude(0.5, 1.5);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::bernoulli_distribution flip(0.5);

  LnnParams params;
  params.layers.resize(static_cast<std::size_t>(depth));
  double slope_so_far = 1.0;
  for (int k = 0; k < depth - 1; ++k) {
    const double w = (flip(rng) ? -1.0 : 1.0) * magnitude(rng);
    params.layers[static_cast<std::size_t>(k)].weight = w;
    params.layers[static_cast<std::size_t>(k)].bias = unit(rng);
    slope_so_far *= w;
  }
  params.layers.back().weight = target.slope / slope_so_far;

  double intercept_so_far = 0.0;
  for (int k = 0; k < depth - 1; ++k) {
    const AffineLayer& layer = params.layers[static_cast<std::size_t>(k)];
    intercept_so_far = layer.weight * intercept_so_far + layer.bias;
  }
  params.layers.back().bias =
      target.intercept - params.layers.back().weight * intercept_so_far;
  return params;
}

}  // namespace lnnbench::testing
