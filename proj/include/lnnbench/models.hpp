#pragma once

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "lnnbench/format.hpp"

namespace lnnbench {

/// Effective line y = slope * x + intercept. Doubles as the closed-form
/// least-squares solution type.
struct LinearParams {
  double slope = 0.0;
  double intercept = 0.0;
};

struct AffineLayer {
  double weight = 0.0;
  double bias = 0.0;
};

/// Chain of scalar affine layers z_k = w_k * z_{k-1} + b_k. Depth 1 is
/// definitionally a LinearParams.
struct LnnParams {
  std::vector<AffineLayer> layers;

  std::size_t depth() const { return layers.size(); }
};

enum class InitScheme {
  kUniform,  // every weight and bias uniform on [-1, 1]
  kNormal,   // standard normal
};

inline std::vector<double> forward_linear(const LinearParams& params,
                                          std::span<const double> inputs) {
  std::vector<double> out(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    out[i] = params.slope * inputs[i] + params.intercept;
  }
  return out;
}

inline std::vector<double> forward_lnn(const LnnParams& params,
                                       std::span<const double> inputs) {
  if (params.layers.empty()) {
    throw std::invalid_argument("forward_lnn: model has no layers");
  }
  std::vector<double> z(inputs.begin(), inputs.end());
  for (const AffineLayer& layer : params.layers) {
    for (double& v : z) {
      v = layer.weight * v + layer.bias;
    }
  }
  return z;
}

/// Effective lines of the leading sub-chains: element k is the line
/// computed by the first k layers, with element 0 the identity map.
/// Element depth() equals collapse().
inline std::vector<LinearParams> prefix_lines(const LnnParams& params) {
  std::vector<LinearParams> lines(params.depth() + 1);
  lines[0] = LinearParams{1.0, 0.0};
  for (std::size_t k = 0; k < params.depth(); ++k) {
    const AffineLayer& layer = params.layers[k];
    lines[k + 1].slope = layer.weight * lines[k].slope;
    lines[k + 1].intercept = layer.weight * lines[k].intercept + layer.bias;
  }
  return lines;
}

/// Reduces an LNN to its effective line via the left-to-right recurrence
/// m <- w_k * m, c <- w_k * c + b_k. O(depth), no product expansion.
inline LinearParams collapse(const LnnParams& params) {
  if (params.layers.empty()) {
    throw std::invalid_argument("collapse: model has no layers");
  }
  double m = 1.0;
  double c = 0.0;
  for (const AffineLayer& layer : params.layers) {
    m = layer.weight * m;
    c = layer.weight * c + layer.bias;
  }
  return {m, c};
}

/// Draws fresh parameters for a depth-layer LNN. The default scheme is
/// uniform on [-1, 1] for every weight and bias, the fan-in-1 case of
/// the usual uniform fan-in initialization.
inline LnnParams init_lnn(int depth, InitScheme scheme, std::mt19937_64& rng) {
  if (depth < 1) {
    throw std::invalid_argument("init_lnn: depth must be at least 1");
  }
  LnnParams params;
  params.layers.resize(static_cast<std::size_t>(depth));
  if (scheme == InitScheme::kUniform) {
    std::uniform_real_distribution<double> uniform(-1.0, 1.0);
    for (AffineLayer& layer : params.layers) {
      layer.weight = uniform(rng);
      layer.bias = uniform(rng);
    }
  } else {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (AffineLayer& layer : params.layers) {
      layer.weight = normal(rng);
      layer.bias = normal(rng);
    }
  }
  return params;
}

// Generic model access used by the trainer and the harness.
inline LinearParams as_line(const LinearParams& params) { return params; }
inline LinearParams as_line(const LnnParams& params) { return collapse(params); }

inline std::vector<double> forward(const LinearParams& params,
                                   std::span<const double> inputs) {
  return forward_linear(params, inputs);
}
inline std::vector<double> forward(const LnnParams& params,
                                   std::span<const double> inputs) {
  return forward_lnn(params, inputs);
}

inline bool all_finite(const LinearParams& params) {
  return std::isfinite(params.slope) && std::isfinite(params.intercept);
}
inline bool all_finite(const LnnParams& params) {
  for (const AffineLayer& layer : params.layers) {
    if (!std::isfinite(layer.weight) || !std::isfinite(layer.bias)) {
      return false;
    }
  }
  return true;
}

/// Flat `layer_index,weight,bias` dump (1-based indices) for run
/// post-mortems.
inline void write_lnn_params(const LnnParams& params, std::ostream& out) {
  out << "layer_index,weight,bias\n";
  for (std::size_t k = 0; k < params.layers.size(); ++k) {
    out << (k + 1) << ',' << format_double(params.layers[k].weight) << ','
        << format_double(params.layers[k].bias) << '\n';
  }
}

inline void write_lnn_params(const LnnParams& params,
                             const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("write_lnn_params: cannot open " + path.string());
  }
  write_lnn_params(params, out);
  if (!out) {
    throw std::runtime_error("write_lnn_params: write failed for " +
                             path.string());
  }
}

}  // namespace lnnbench
