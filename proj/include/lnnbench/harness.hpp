#pragma once

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <exception>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "lnnbench/dataset.hpp"
#include "lnnbench/format.hpp"
#include "lnnbench/models.hpp"
#include "lnnbench/optim.hpp"
#include "lnnbench/oracle.hpp"
#include "lnnbench/rng.hpp"

namespace lnnbench {

struct ExperimentConfig {
  std::vector<double> noise_coefficients{0.05, 0.15, 0.30, 0.50};
  std::vector<int> depths{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};  // 1 = LinReg
  int runs_per_cell = 100;
  int train_size = 1000;
  int test_size = 200;
  TrainConfig train_config{};
  std::uint64_t master_seed = 1;
  int workers = 0;          // 0 = all hardware threads
  int traces_per_cell = 0;  // leading runs whose traces are written out
};

inline void validate(const ExperimentConfig& config) {
  if (config.noise_coefficients.empty()) {
    throw std::invalid_argument("ExperimentConfig: no noise coefficients");
  }
  for (double beta : config.noise_coefficients) {
    if (!std::isfinite(beta) || beta < 0.0) {
      throw std::invalid_argument(
          "ExperimentConfig: noise coefficients must be finite and >= 0");
    }
  }
  if (config.depths.empty()) {
    throw std::invalid_argument("ExperimentConfig: no depths");
  }
  for (int depth : config.depths) {
    if (depth < 1) {
      throw std::invalid_argument("ExperimentConfig: depths must be >= 1");
    }
  }
  if (config.runs_per_cell < 1) {
    throw std::invalid_argument("ExperimentConfig: runs_per_cell must be >= 1");
  }
  if (config.train_size < 2 || config.test_size < 2) {
    throw std::invalid_argument(
        "ExperimentConfig: train and test sizes must be >= 2");
  }
  if (config.workers < 0) {
    throw std::invalid_argument("ExperimentConfig: workers must be >= 0");
  }
  if (config.traces_per_cell < 0) {
    throw std::invalid_argument(
        "ExperimentConfig: traces_per_cell must be >= 0");
  }
  validate(config.train_config);
}

inline std::string model_label(int depth) {
  return depth == 1 ? std::string("LinReg") : "LNN-" + std::to_string(depth);
}

/// Directory/replay name of a grid cell, e.g. "LNN-3_beta0.05".
inline std::string cell_name(int depth, double beta) {
  return model_label(depth) + "_beta" + format_double(beta);
}

// Per-run seed derivation. Data streams are keyed by (master, beta, run)
// only, so every depth of the same run index trains on identical
// datasets (each experiment compares all models on one draw). The init
// stream adds the depth. Beta enters by value bits, keeping a cell's
// statistics independent of what else is in the grid.
inline std::uint64_t run_data_seed(std::uint64_t master_seed, double beta,
                                   int run_index) {
  return derive_seed(master_seed, kStreamRunData,
                     std::bit_cast<std::uint64_t>(beta),
                     static_cast<std::uint64_t>(run_index));
}

inline std::uint64_t run_init_seed(std::uint64_t master_seed, int depth,
                                   double beta, int run_index) {
  return derive_seed(master_seed, kStreamInit,
                     static_cast<std::uint64_t>(depth),
                     std::bit_cast<std::uint64_t>(beta),
                     static_cast<std::uint64_t>(run_index));
}

struct SingleRunSpec {
  int depth = 1;
  double beta = 0.0;
  int train_size = 1000;
  int test_size = 200;
  TrainConfig train_config{};
  std::uint64_t data_seed = 0;
  std::uint64_t init_seed = 0;
};

struct SingleRunOutcome {
  RunResult<LnnParams> result;
  LinearParams oracle{};  // normal-equation solution on the train split
  double true_weight = 0.0;
  double true_bias = 0.0;
};

/// One full experiment run: sample the generating line, draw train and
/// test sets with the same noise coefficient, solve the oracle on the
/// train set, initialize, train.
inline SingleRunOutcome run_single(const SingleRunSpec& spec) {
  if (spec.depth < 1) {
    throw std::invalid_argument("run_single: depth must be >= 1");
  }
  auto line_rng = make_engine(derive_seed(spec.data_seed, kStreamTrueParams));
  const auto [a, b] = sample_true_params(line_rng);

  const Dataset train_data =
      generate_dataset(static_cast<std::size_t>(spec.train_size), a, b,
                       spec.beta, derive_seed(spec.data_seed, kStreamTrainData));
  const Dataset test_data =
      generate_dataset(static_cast<std::size_t>(spec.test_size), a, b,
                       spec.beta, derive_seed(spec.data_seed, kStreamTestData));

  const LinearParams oracle = normal_equation(train_data);

  auto init_rng = make_engine(spec.init_seed);
  LnnParams params =
      init_lnn(spec.depth, spec.train_config.init_scheme, init_rng);

  SingleRunOutcome outcome;
  outcome.result = train(std::move(params), train_data, test_data,
                         spec.train_config, oracle);
  outcome.oracle = oracle;
  outcome.true_weight = a;
  outcome.true_bias = b;
  return outcome;
}

struct CellSummary {
  int depth = 1;
  double noise_coefficient = 0.0;
  double mean_test_mse = 0.0;
  double std_test_mse = 0.0;
  double mean_final_deviation = 0.0;
  int divergence_count = 0;
  // Per-iteration mean of D across the cell's runs, shorter runs padded
  // by carrying their final value forward.
  std::vector<double> mean_d_curve;
};

/// Mean of several curves, aligning by carrying each curve's final value
/// forward past its end. Deterministic for a fixed curve order.
inline std::vector<double> mean_d_curve(
    const std::vector<std::vector<double>>& curves) {
  if (curves.empty()) {
    throw std::invalid_argument("mean_d_curve: no curves");
  }
  std::vector<double> acc;
  double finals_so_far = 0.0;  // sum of final values of merged curves
  for (const std::vector<double>& curve : curves) {
    if (curve.empty()) {
      throw std::invalid_argument("mean_d_curve: empty curve");
    }
    if (curve.size() > acc.size()) {
      acc.resize(curve.size(), finals_so_far);
    }
    for (std::size_t t = 0; t < curve.size(); ++t) {
      acc[t] += curve[t];
    }
    const double final_value = curve.back();
    for (std::size_t t = curve.size(); t < acc.size(); ++t) {
      acc[t] += final_value;
    }
    finals_so_far += final_value;
  }
  const double scale = 1.0 / static_cast<double>(curves.size());
  for (double& v : acc) {
    v *= scale;
  }
  return acc;
}

namespace detail {

/// Runs body(i) for i in [0, count) on up to `workers` threads. Work is
/// claimed dynamically; results must be written to disjoint slots.
template <typename Body>
void parallel_for(int count, int workers, Body&& body) {
  if (workers <= 0) {
    workers = static_cast<int>(std::thread::hardware_concurrency());
  }
  workers = std::max(1, std::min(workers, count));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) {
      body(i);
    }
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1, std::memory_order_relaxed);
        if (i >= count) {
          return;
        }
        body(i);
      }
    });
  }
  for (std::thread& t : pool) {
    t.join();
  }
}

}  // namespace detail

struct CellResult {
  CellSummary summary;
  std::vector<SingleRunOutcome> runs;
};

/// Runs one (depth, beta) cell: runs_per_cell independent runs, executed
/// in parallel, aggregated in run-index order so the result does not
/// depend on scheduling.
inline CellResult run_cell(const ExperimentConfig& config, int depth,
                           double beta) {
  validate(config);
  if (depth < 1) {
    throw std::invalid_argument("run_cell: depth must be >= 1");
  }

  const int n_runs = config.runs_per_cell;
  CellResult cell;
  cell.runs.resize(static_cast<std::size_t>(n_runs));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n_runs));

  detail::parallel_for(n_runs, config.workers, [&](int i) {
    try {
      SingleRunSpec spec;
      spec.depth = depth;
      spec.beta = beta;
      spec.train_size = config.train_size;
      spec.test_size = config.test_size;
      spec.train_config = config.train_config;
      spec.data_seed = run_data_seed(config.master_seed, beta, i);
      spec.init_seed = run_init_seed(config.master_seed, depth, beta, i);
      cell.runs[static_cast<std::size_t>(i)] = run_single(spec);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  });

  for (const std::exception_ptr& error : errors) {
    if (error) {
      std::rethrow_exception(error);
    }
  }

  CellSummary& summary = cell.summary;
  summary.depth = depth;
  summary.noise_coefficient = beta;

  double mse_sum = 0.0;
  double dev_sum = 0.0;
  std::vector<std::vector<double>> d_curves;
  d_curves.reserve(cell.runs.size());
  for (const SingleRunOutcome& run : cell.runs) {
    const TracePoint& last = run.result.trace.back();
    mse_sum += last.test_mse;
    dev_sum += last.deviation;
    if (run.result.status == RunStatus::kDiverged) {
      ++summary.divergence_count;
    }
    std::vector<double> curve(run.result.trace.size());
    for (std::size_t t = 0; t < curve.size(); ++t) {
      curve[t] = run.result.trace[t].deviation;
    }
    d_curves.push_back(std::move(curve));
  }
  const double inv_n = 1.0 / static_cast<double>(n_runs);
  summary.mean_test_mse = mse_sum * inv_n;
  summary.mean_final_deviation = dev_sum * inv_n;

  // Population standard deviation: a single run has spread zero.
  double var_sum = 0.0;
  for (const SingleRunOutcome& run : cell.runs) {
    const double d = run.result.trace.back().test_mse - summary.mean_test_mse;
    var_sum += d * d;
  }
  summary.std_test_mse = std::sqrt(var_sum * inv_n);
  summary.mean_d_curve = mean_d_curve(d_curves);
  return cell;
}

struct CellFailure {
  int depth = 0;
  double beta = 0.0;
  std::string message;
};

struct ExperimentResult {
  std::vector<CellSummary> summaries;  // sorted by depth, then beta
  std::vector<CellFailure> failures;
};

/// Grid of cells over sorted unique depths and noise coefficients.
/// Cell failures are collected instead of aborting the remaining grid;
/// only a fully failed grid throws. `on_cell`, when set, receives every
/// finished cell (with its runs) before the runs are discarded.
template <typename CellSink>
ExperimentResult run_experiment(const ExperimentConfig& config,
                                CellSink&& on_cell) {
  validate(config);

  std::vector<int> depths = config.depths;
  std::sort(depths.begin(), depths.end());
  depths.erase(std::unique(depths.begin(), depths.end()), depths.end());
  std::vector<double> betas = config.noise_coefficients;
  std::sort(betas.begin(), betas.end());
  betas.erase(std::unique(betas.begin(), betas.end()), betas.end());

  ExperimentResult result;
  for (int depth : depths) {
    for (double beta : betas) {
      try {
        CellResult cell = run_cell(config, depth, beta);
        on_cell(cell);
        result.summaries.push_back(std::move(cell.summary));
      } catch (const std::exception& e) {
        result.failures.push_back({depth, beta, e.what()});
      }
    }
  }
  if (result.summaries.empty()) {
    std::string message = "run_experiment: every cell failed";
    if (!result.failures.empty()) {
      message += "; first: " + result.failures.front().message;
    }
    throw std::runtime_error(message);
  }
  return result;
}

inline ExperimentResult run_experiment(const ExperimentConfig& config) {
  return run_experiment(config, [](const CellResult&) {});
}

}  // namespace lnnbench
