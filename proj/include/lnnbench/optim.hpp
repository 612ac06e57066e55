#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lnnbench/dataset.hpp"
#include "lnnbench/format.hpp"
#include "lnnbench/models.hpp"
#include "lnnbench/oracle.hpp"

namespace lnnbench {

struct TrainConfig {
  double learning_rate = 1e-3;
  long max_iterations = 100000;
  // Converged when the relative train-loss change stays below the
  // tolerance for convergence_window consecutive iterations.
  double convergence_tol = 1e-10;
  int convergence_window = 20;
  double divergence_threshold = 1e12;
  InitScheme init_scheme = InitScheme::kUniform;
  std::uint64_t seed = 0;
};

// A zero learning rate is accepted: the run then cannot make progress
// and uses its whole iteration budget. Negative rates ascend; rejected.
inline void validate(const TrainConfig& config) {
  if (!std::isfinite(config.learning_rate) || config.learning_rate < 0.0) {
    throw std::invalid_argument("TrainConfig: learning_rate must be finite and >= 0");
  }
  if (config.max_iterations < 1) {
    throw std::invalid_argument("TrainConfig: max_iterations must be >= 1");
  }
  if (!std::isfinite(config.convergence_tol) || config.convergence_tol <= 0.0) {
    throw std::invalid_argument("TrainConfig: convergence_tol must be > 0");
  }
  if (config.convergence_window < 1) {
    throw std::invalid_argument("TrainConfig: convergence_window must be >= 1");
  }
  if (!std::isfinite(config.divergence_threshold) ||
      config.divergence_threshold <= 0.0) {
    throw std::invalid_argument("TrainConfig: divergence_threshold must be > 0");
  }
}

enum class RunStatus { kConverged, kBudgetExhausted, kDiverged };

inline const char* to_string(RunStatus status) {
  switch (status) {
    case RunStatus::kConverged: return "converged";
    case RunStatus::kBudgetExhausted: return "budget_exhausted";
    case RunStatus::kDiverged: return "diverged";
  }
  return "unknown";
}

struct TracePoint {
  long iteration = 0;
  double train_mse = 0.0;
  double test_mse = 0.0;
  double deviation = 0.0;
};

template <typename Model>
struct RunResult {
  Model final_params{};
  RunStatus status = RunStatus::kBudgetExhausted;
  std::vector<TracePoint> trace;
  long iterations_used = 0;
};

/// Mean squared error J = (1/N) * sum((pred_i - label_i)^2).
inline double mse(std::span<const double> predictions,
                  std::span<const double> labels) {
  if (predictions.size() != labels.size()) {
    throw std::invalid_argument("mse: prediction/label length mismatch");
  }
  if (predictions.empty()) {
    throw std::invalid_argument("mse: empty input");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double r = predictions[i] - labels[i];
    acc += r * r;
  }
  return acc / static_cast<double>(predictions.size());
}

/// MSE gradient of a line:
///   dJ/dm = (2/N) * sum((yhat_i - y_i) * x_i)
///   dJ/db = (2/N) * sum(yhat_i - y_i)
inline std::pair<double, double> grad_linear(const LinearParams& params,
                                             const Dataset& data) {
  const std::size_t n = data.inputs.size();
  if (n == 0) {
    throw std::invalid_argument("grad_linear: empty dataset");
  }
  double r_sum = 0.0;
  double rx_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r =
        params.slope * data.inputs[i] + params.intercept - data.labels[i];
    r_sum += r;
    rx_sum += r * data.inputs[i];
  }
  const double scale = 2.0 / static_cast<double>(n);
  return {scale * rx_sum, scale * r_sum};
}

/// All 2L partials of the MSE, ordered layer by layer as
/// (dJ/dw_1, dJ/db_1, ..., dJ/dw_L, dJ/db_L).
///
/// Every activation z_{k-1} is itself a line in x, so each partial
/// reduces to the two residual moments sum(r) and sum(r*x):
///   dJ/dw_k = (2/N) * S_k * sum_i r_i * z_{k-1,i}
///   dJ/db_k = (2/N) * S_k * sum_i r_i
/// with S_k the product of the weights after layer k.
inline std::vector<double> grad_lnn(const LnnParams& params,
                                    const Dataset& data) {
  const std::size_t depth = params.depth();
  const std::size_t n = data.inputs.size();
  if (depth == 0) {
    throw std::invalid_argument("grad_lnn: model has no layers");
  }
  if (n == 0) {
    throw std::invalid_argument("grad_lnn: empty dataset");
  }

  const std::vector<LinearParams> prefix = prefix_lines(params);
  std::vector<double> suffix(depth, 1.0);
  for (std::size_t k = depth - 1; k-- > 0;) {
    suffix[k] = suffix[k + 1] * params.layers[k + 1].weight;
  }

  const LinearParams& effective = prefix[depth];
  double r_sum = 0.0;
  double rx_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = effective.slope * data.inputs[i] + effective.intercept -
                     data.labels[i];
    r_sum += r;
    rx_sum += r * data.inputs[i];
  }

  const double scale = 2.0 / static_cast<double>(n);
  std::vector<double> grads(2 * depth);
  for (std::size_t k = 0; k < depth; ++k) {
    const double moment =
        prefix[k].slope * rx_sum + prefix[k].intercept * r_sum;
    grads[2 * k] = scale * suffix[k] * moment;
    grads[2 * k + 1] = scale * suffix[k] * r_sum;
  }
  return grads;
}

inline std::pair<double, double> gradient(const LinearParams& params,
                                          const Dataset& data) {
  return grad_linear(params, data);
}
inline std::vector<double> gradient(const LnnParams& params,
                                    const Dataset& data) {
  return grad_lnn(params, data);
}

/// One full-batch update p <- p - alpha * dJ/dp, all parameters moving
/// simultaneously from their pre-step values.
inline LinearParams gd_step(const LinearParams& params,
                            const std::pair<double, double>& grads,
                            double learning_rate) {
  return {params.slope - learning_rate * grads.first,
          params.intercept - learning_rate * grads.second};
}

inline LnnParams gd_step(const LnnParams& params, std::span<const double> grads,
                         double learning_rate) {
  if (grads.size() != 2 * params.depth()) {
    throw std::invalid_argument("gd_step: gradient/parameter size mismatch");
  }
  LnnParams next = params;
  for (std::size_t k = 0; k < next.layers.size(); ++k) {
    next.layers[k].weight -= learning_rate * grads[2 * k];
    next.layers[k].bias -= learning_rate * grads[2 * k + 1];
  }
  return next;
}

/// Full-batch gradient descent until convergence, budget exhaustion, or
/// divergence. The trace records train MSE, test MSE and the deviation
/// D from `oracle_params` after every step; on divergence the last
/// entry is the last finite state seen.
template <typename Model>
RunResult<Model> train(Model initial, const Dataset& train_data,
                       const Dataset& test_data, const TrainConfig& config,
                       const LinearParams& oracle_params) {
  validate(config);

  RunResult<Model> result;
  Model params = std::move(initial);

  double prev_loss = mse(forward(params, train_data.inputs), train_data.labels);
  // Pre-step snapshot; enters the trace only if the very first step
  // already diverges, keeping the trace non-empty.
  const TracePoint initial_point{
      0, prev_loss, mse(forward(params, test_data.inputs), test_data.labels),
      deviation(as_line(params), oracle_params)};

  // With a zero learning rate the loss never changes; that is absence
  // of progress, not convergence, so the budget governs.
  const bool can_converge = config.learning_rate > 0.0;
  int below_tol_streak = 0;

  for (long iter = 1; iter <= config.max_iterations; ++iter) {
    const auto grads = gradient(params, train_data);
    params = gd_step(params, grads, config.learning_rate);
    result.iterations_used = iter;

    if (!all_finite(params)) {
      result.status = RunStatus::kDiverged;
      break;
    }
    const double train_loss =
        mse(forward(params, train_data.inputs), train_data.labels);
    const double test_loss =
        mse(forward(params, test_data.inputs), test_data.labels);
    const double dev = deviation(as_line(params), oracle_params);
    if (!std::isfinite(train_loss) || !std::isfinite(test_loss) ||
        !std::isfinite(dev)) {
      result.status = RunStatus::kDiverged;
      break;
    }

    result.trace.push_back({iter, train_loss, test_loss, dev});

    if (train_loss > config.divergence_threshold) {
      result.status = RunStatus::kDiverged;
      break;
    }

    // Relative change with a unit floor in the denominator, so a loss
    // decaying geometrically toward zero still registers as converged.
    const double denom = std::max({train_loss, prev_loss, 1.0});
    if (can_converge &&
        std::abs(train_loss - prev_loss) < config.convergence_tol * denom) {
      if (++below_tol_streak >= config.convergence_window) {
        result.status = RunStatus::kConverged;
        prev_loss = train_loss;
        break;
      }
    } else {
      below_tol_streak = 0;
    }
    prev_loss = train_loss;
  }

  if (result.trace.empty()) {
    result.trace.push_back(initial_point);
  }
  result.final_params = std::move(params);
  return result;
}

inline void write_trace_csv(std::span<const TracePoint> trace,
                            std::ostream& out) {
  out << "iteration,train_mse,test_mse,deviation\n";
  for (const TracePoint& point : trace) {
    out << point.iteration << ',' << format_double(point.train_mse) << ','
        << format_double(point.test_mse) << ','
        << format_double(point.deviation) << '\n';
  }
}

inline void write_trace_csv(std::span<const TracePoint> trace,
                            const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("write_trace_csv: cannot open " + path.string());
  }
  write_trace_csv(trace, out);
  if (!out) {
    throw std::runtime_error("write_trace_csv: write failed for " +
                             path.string());
  }
}

}  // namespace lnnbench
