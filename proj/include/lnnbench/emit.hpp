#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lnnbench/format.hpp"
#include "lnnbench/harness.hpp"
#include "lnnbench/svg.hpp"

#include <json.hpp>

namespace lnnbench {

/// Results table, one row per cell:
/// model,beta,mean_test_mse,std_test_mse,mean_final_D,divergence_count
inline void emit_table(std::span<const CellSummary> summaries,
                       const std::filesystem::path& path) {
  if (summaries.empty()) {
    throw std::invalid_argument("emit_table: no summaries");
  }
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("emit_table: cannot open " + path.string());
  }
  out << "model,beta,mean_test_mse,std_test_mse,mean_final_D,divergence_count\n";
  for (const CellSummary& cell : summaries) {
    out << model_label(cell.depth) << ','
        << format_double(cell.noise_coefficient) << ','
        << format_double(cell.mean_test_mse) << ','
        << format_double(cell.std_test_mse) << ','
        << format_double(cell.mean_final_deviation) << ','
        << cell.divergence_count << '\n';
  }
  if (!out) {
    throw std::runtime_error("emit_table: write failed for " + path.string());
  }
}

namespace detail {

inline std::vector<double> sorted_betas(std::span<const CellSummary> summaries) {
  std::set<double> betas;
  for (const CellSummary& cell : summaries) {
    betas.insert(cell.noise_coefficient);
  }
  return {betas.begin(), betas.end()};
}

// Every ~stride-th point of a curve plus its last one; the SVG stays
// small while the CSV keeps full resolution.
inline std::vector<std::pair<double, double>> thin_curve(
    const std::vector<double>& curve, std::size_t max_points = 1500) {
  std::vector<std::pair<double, double>> points;
  if (curve.empty()) {
    return points;
  }
  const std::size_t stride = std::max<std::size_t>(1, curve.size() / max_points);
  for (std::size_t t = 0; t < curve.size(); t += stride) {
    points.emplace_back(static_cast<double>(t + 1), curve[t]);
  }
  if (points.back().first != static_cast<double>(curve.size())) {
    points.emplace_back(static_cast<double>(curve.size()), curve.back());
  }
  return points;
}

}  // namespace detail

/// Mean deviation-vs-iteration data for one noise level, one column per
/// model. Rows past a model's last iteration are left blank.
inline void emit_fig1_csv(std::span<const CellSummary> summaries, double beta,
                          const std::filesystem::path& path) {
  std::vector<const CellSummary*> cells;
  for (const CellSummary& cell : summaries) {
    if (cell.noise_coefficient == beta) {
      cells.push_back(&cell);
    }
  }
  if (cells.empty()) {
    throw std::invalid_argument("emit_fig1_csv: no cells at requested beta");
  }
  std::sort(cells.begin(), cells.end(),
            [](const CellSummary* a, const CellSummary* b) {
              return a->depth < b->depth;
            });

  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("emit_fig1_csv: cannot open " + path.string());
  }
  out << "iteration";
  std::size_t max_len = 0;
  for (const CellSummary* cell : cells) {
    out << ',' << model_label(cell->depth);
    max_len = std::max(max_len, cell->mean_d_curve.size());
  }
  out << '\n';
  for (std::size_t t = 0; t < max_len; ++t) {
    out << (t + 1);
    for (const CellSummary* cell : cells) {
      out << ',';
      if (t < cell->mean_d_curve.size()) {
        out << format_double(cell->mean_d_curve[t]);
      }
    }
    out << '\n';
  }
  if (!out) {
    throw std::runtime_error("emit_fig1_csv: write failed for " +
                             path.string());
  }
}

/// Mean test MSE per cell in long form: model,depth,beta,mean_test_mse.
inline void emit_fig2_csv(std::span<const CellSummary> summaries,
                          const std::filesystem::path& path) {
  if (summaries.empty()) {
    throw std::invalid_argument("emit_fig2_csv: no summaries");
  }
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("emit_fig2_csv: cannot open " + path.string());
  }
  out << "model,depth,beta,mean_test_mse\n";
  for (const CellSummary& cell : summaries) {
    out << model_label(cell.depth) << ',' << cell.depth << ','
        << format_double(cell.noise_coefficient) << ','
        << format_double(cell.mean_test_mse) << '\n';
  }
  if (!out) {
    throw std::runtime_error("emit_fig2_csv: write failed for " +
                             path.string());
  }
}

/// Writes the per-beta mean-deviation plots and the MSE-vs-depth trend
/// plot, each as SVG plus the underlying CSV data.
inline void emit_plots(std::span<const CellSummary> summaries,
                       const std::filesystem::path& directory) {
  if (summaries.empty()) {
    throw std::invalid_argument("emit_plots: no summaries");
  }
  std::filesystem::create_directories(directory);

  for (double beta : detail::sorted_betas(summaries)) {
    const std::string suffix = "beta" + format_double(beta);
    emit_fig1_csv(summaries, beta, directory / ("fig1_" + suffix + ".csv"));

    LinePlot plot;
    plot.title = "Mean optimal parameter deviation, beta=" + format_double(beta);
    plot.x_label = "iteration";
    plot.y_label = "mean deviation D";
    std::vector<const CellSummary*> cells;
    for (const CellSummary& cell : summaries) {
      if (cell.noise_coefficient == beta) {
        cells.push_back(&cell);
      }
    }
    std::sort(cells.begin(), cells.end(),
              [](const CellSummary* a, const CellSummary* b) {
                return a->depth < b->depth;
              });
    for (const CellSummary* cell : cells) {
      plot.series.push_back(
          {model_label(cell->depth), detail::thin_curve(cell->mean_d_curve)});
    }
    write_svg(plot, directory / ("fig1_" + suffix + ".svg"));
  }

  emit_fig2_csv(summaries, directory / "fig2.csv");
  LinePlot trend;
  trend.title = "Mean test MSE by model depth";
  trend.x_label = "layers (1 = linear regression)";
  trend.y_label = "mean test MSE";
  for (double beta : detail::sorted_betas(summaries)) {
    PlotSeries series;
    series.name = "beta=" + format_double(beta);
    std::map<int, double> by_depth;
    for (const CellSummary& cell : summaries) {
      if (cell.noise_coefficient == beta) {
        by_depth[cell.depth] = cell.mean_test_mse;
      }
    }
    for (const auto& [depth, mse] : by_depth) {
      series.points.emplace_back(static_cast<double>(depth), mse);
    }
    trend.series.push_back(std::move(series));
  }
  write_svg(trend, directory / "fig2.svg");
}

/// Experiment configuration and aggregation policy, for reproducing a
/// results directory later.
inline void emit_metadata(const ExperimentConfig& config,
                          std::span<const CellFailure> failures,
                          const std::string& version,
                          const std::filesystem::path& path) {
  nlohmann::json meta;
  meta["version"] = version;
  meta["master_seed"] = config.master_seed;
  meta["noise_coefficients"] = config.noise_coefficients;
  meta["depths"] = config.depths;
  meta["runs_per_cell"] = config.runs_per_cell;
  meta["train_size"] = config.train_size;
  meta["test_size"] = config.test_size;
  meta["learning_rate"] = config.train_config.learning_rate;
  meta["max_iterations"] = config.train_config.max_iterations;
  meta["convergence_tol"] = config.train_config.convergence_tol;
  meta["convergence_window"] = config.train_config.convergence_window;
  meta["divergence_threshold"] = config.train_config.divergence_threshold;
  meta["init_scheme"] =
      config.train_config.init_scheme == InitScheme::kUniform ? "uniform"
                                                              : "normal";
  meta["traces_per_cell"] = config.traces_per_cell;
  meta["policy"] = {
      {"diverged_runs",
       "included in all summary statistics via their last finite trace entry"},
      {"d_curve_alignment",
       "per-iteration mean over all runs, final value carried forward past "
       "each run's end"},
      {"std", "population standard deviation over runs"},
  };
  if (!failures.empty()) {
    nlohmann::json failed = nlohmann::json::array();
    for (const CellFailure& f : failures) {
      failed.push_back({{"depth", f.depth},
                        {"beta", f.beta},
                        {"error", f.message}});
    }
    meta["failed_cells"] = failed;
  }

  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("emit_metadata: cannot open " + path.string());
  }
  out << meta.dump(2) << '\n';
  if (!out) {
    throw std::runtime_error("emit_metadata: write failed for " +
                             path.string());
  }
}

}  // namespace lnnbench
