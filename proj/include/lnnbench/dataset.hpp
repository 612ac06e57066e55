#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "lnnbench/format.hpp"
#include "lnnbench/rng.hpp"

namespace lnnbench {

/// Univariate regression sample together with the line that generated it.
struct Dataset {
  std::vector<double> inputs;
  std::vector<double> labels;
  double true_weight = 0.0;
  double true_bias = 0.0;
  double noise_coefficient = 0.0;
};

/// Draws the generating slope and intercept as independent standard
/// normals.
inline std::pair<double, double> sample_true_params(std::mt19937_64& rng) {
  std::normal_distribution<double> standard_normal(0.0, 1.0);
  const double a = standard_normal(rng);
  const double b = standard_normal(rng);
  return {a, b};
}

/// Generates n standard-normal inputs and labels a*x + b corrupted by
/// Gaussian noise scaled to beta times the empirical mean of the clean
/// labels:
///
///   y_i = a*x_i + b + beta * eps_i * mean(a*x + b),  eps_i ~ N(0, 1)
///
/// Inputs and noise are drawn from separate streams derived from `seed`,
/// so the input vector is identical across noise settings for the same
/// seed.
inline Dataset generate_dataset(std::size_t n, double a, double b, double beta,
                                std::uint64_t seed) {
  if (n < 2) {
    throw std::invalid_argument("generate_dataset: need at least 2 samples");
  }
  if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(beta)) {
    throw std::invalid_argument("generate_dataset: non-finite parameter");
  }
  if (beta < 0.0) {
    throw std::invalid_argument("generate_dataset: beta must be non-negative");
  }

  auto input_rng = make_engine(derive_seed(seed, kStreamInputs));
  auto noise_rng = make_engine(derive_seed(seed, kStreamNoise));
  std::normal_distribution<double> standard_normal(0.0, 1.0);

  Dataset data;
  data.true_weight = a;
  data.true_bias = b;
  data.noise_coefficient = beta;
  data.inputs.resize(n);
  data.labels.resize(n);

  for (double& x : data.inputs) {
    x = standard_normal(input_rng);
  }

  double clean_mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    data.labels[i] = a * data.inputs[i] + b;
    clean_mean += data.labels[i];
  }
  clean_mean /= static_cast<double>(n);

  for (double& y : data.labels) {
    y += beta * standard_normal(noise_rng) * clean_mean;
  }
  return data;
}

/// Dumps a dataset as `x,y` rows. The leading comment line records the
/// generating parameters and the seed used.
inline void write_dataset_csv(const Dataset& data,
                              const std::filesystem::path& path,
                              std::uint64_t seed) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("write_dataset_csv: cannot open " + path.string());
  }
  out << "# a=" << format_double(data.true_weight)
      << " b=" << format_double(data.true_bias)
      << " beta=" << format_double(data.noise_coefficient) << " seed=" << seed
      << "\n";
  out << "x,y\n";
  for (std::size_t i = 0; i < data.inputs.size(); ++i) {
    out << format_double(data.inputs[i]) << ',' << format_double(data.labels[i])
        << '\n';
  }
  if (!out) {
    throw std::runtime_error("write_dataset_csv: write failed for " +
                             path.string());
  }
}

}  // namespace lnnbench
