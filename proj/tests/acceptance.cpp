// Acceptance suite: end-to-end statistical and numerical checks, one
// printed line per criterion. Exits non-zero if any criterion fails.

#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "lnnbench/dataset.hpp"
#include "lnnbench/harness.hpp"
#include "lnnbench/models.hpp"
#include "lnnbench/optim.hpp"
#include "lnnbench/oracle.hpp"

#include "helpers.hpp"

using namespace lnnbench;
using lnnbench::testing::central_differences;
using lnnbench::testing::flatten;
using lnnbench::testing::unflatten;

namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int index, const std::string& name, bool pass,
            const std::string& detail) {
  std::printf("[%d/8] %s %s (%s)\n", index, pass ? "PASS" : "FAIL",
              name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) {
    ++g_failures;
  }
}

bool within(double value, double reference, double rel, double abs_tol) {
  return std::abs(value - reference) <=
         std::max(abs_tol, rel * std::max(std::abs(value),
                                          std::abs(reference)));
}

// 1. Analytic gradients against central finite differences.
void criterion_gradients() {
  auto rng = make_engine(9001);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> size_draw(2, 50);
  std::uniform_int_distribution<int> depth_draw(1, 10);
  std::uniform_real_distribution<double> beta_draw(0.0, 0.5);

  int bad = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Dataset data =
        generate_dataset(size_draw(rng), normal(rng), normal(rng),
                         beta_draw(rng), derive_seed(9001, trial));
    std::vector<double> analytic;
    std::vector<double> numeric;
    if (trial % 2 == 0) {
      const LinearParams params{normal(rng), normal(rng)};
      const auto [dm, db] = grad_linear(params, data);
      analytic = {dm, db};
      numeric = central_differences(
          [&](const std::vector<double>& flat) {
            return mse(forward_linear({flat[0], flat[1]}, data.inputs),
                       data.labels);
          },
          {params.slope, params.intercept}, 1e-6);
    } else {
      const LnnParams params =
          init_lnn(depth_draw(rng), InitScheme::kUniform, rng);
      analytic = grad_lnn(params, data);
      numeric = central_differences(
          [&](const std::vector<double>& flat) {
            return mse(forward_lnn(unflatten(flat), data.inputs), data.labels);
          },
          flatten(params), 1e-6);
    }
    for (std::size_t j = 0; j < analytic.size(); ++j) {
      const double err = std::abs(analytic[j] - numeric[j]);
      const double scale =
          std::max(std::abs(analytic[j]), std::abs(numeric[j]));
      worst = std::max(worst, scale > 0.0 ? err / scale : err);
      if (!within(analytic[j], numeric[j], 1e-5, 1e-8)) {
        ++bad;
      }
    }
  }
  char detail[128];
  std::snprintf(detail, sizeof(detail),
                "100 cases, %d partials out of tolerance, worst rel err %.2e",
                bad, worst);
  report(1, "gradient finite-difference suite", bad == 0, detail);
}

// 2. forward_lnn == forward_linear(collapse(.)) on random chains.
void criterion_collapse() {
  auto rng = make_engine(9002);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> depth_draw(1, 10);

  int bad = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const LnnParams params =
        init_lnn(depth_draw(rng), InitScheme::kUniform, rng);
    const LinearParams line = collapse(params);
    std::vector<double> inputs(100);
    for (double& x : inputs) x = normal(rng);
    const auto chained = forward_lnn(params, inputs);
    const auto collapsed = forward_linear(line, inputs);
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      const double err = std::abs(chained[i] - collapsed[i]);
      const double scale =
          std::max(std::abs(chained[i]), std::abs(collapsed[i]));
      worst = std::max(worst, scale > 0.0 ? err / scale : err);
      // absolute floor 1e-12 covers points where the output crosses zero
      if (err > std::max(1e-12, 1e-9 * scale)) {
        ++bad;
      }
    }
  }
  char detail[128];
  std::snprintf(detail, sizeof(detail),
                "1000 chains x 100 inputs, %d mismatches, worst rel err %.2e",
                bad, worst);
  report(2, "collapse equivalence suite", bad == 0, detail);
}

// 3. grad_linear vanishes at the normal-equation solution.
void criterion_stationarity() {
  auto rng = make_engine(9003);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> size_draw(2, 10000);
  std::uniform_real_distribution<double> beta_draw(0.0, 0.5);

  int bad = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Dataset data =
        generate_dataset(size_draw(rng), normal(rng), normal(rng),
                         beta_draw(rng), derive_seed(9003, trial));
    const auto [dm, db] = grad_linear(normal_equation(data), data);
    worst = std::max({worst, std::abs(dm), std::abs(db)});
    if (std::abs(dm) >= 1e-9 || std::abs(db) >= 1e-9) {
      ++bad;
    }
  }
  char detail[128];
  std::snprintf(detail, sizeof(detail),
                "100 datasets, %d above 1e-9, worst gradient %.2e", bad,
                worst);
  report(3, "oracle stationarity", bad == 0, detail);
}

// 4. Noiseless depth-1 training recovers the generating line.
void criterion_noiseless_recovery() {
  ExperimentConfig config;
  config.runs_per_cell = 100;
  config.master_seed = 1;
  const auto cell = run_cell(config, 1, 0.0);
  int good = 0;
  for (const SingleRunOutcome& run : cell.runs) {
    if (run.result.status == RunStatus::kConverged &&
        run.result.trace.back().deviation < 1e-3) {
      ++good;
    }
  }
  char detail[128];
  std::snprintf(detail, sizeof(detail),
                "%d/100 runs converged with D < 1e-3, mean D %.2e", good,
                cell.summary.mean_final_deviation);
  report(4, "noiseless recovery", good >= 95, detail);
}

// 5. LinReg mean test MSE tracks the analytic noise floor beta^2.
void criterion_linreg_noise_floor() {
  ExperimentConfig config;
  config.runs_per_cell = 100;
  config.master_seed = 1;
  bool pass = true;
  std::string detail;
  for (double beta : {0.05, 0.15, 0.3, 0.5}) {
    const auto cell = run_cell(config, 1, beta);
    const double floor = beta * beta;
    const bool ok = cell.summary.mean_test_mse >= 0.5 * floor &&
                    cell.summary.mean_test_mse <= 2.0 * floor;
    pass = pass && ok;
    char part[64];
    std::snprintf(part, sizeof(part), "beta=%g: %.4g vs %.4g%s ", beta,
                  cell.summary.mean_test_mse, floor, ok ? "" : " [off]");
    detail += part;
  }
  report(5, "LinReg row tracks beta^2 within 2x", pass, detail);
}

// 6+7 share their cells: beta = 0.05, depths 1, 2 and 10, 40 runs.
void criteria_depth_degradation_and_deviation() {
  ExperimentConfig config;
  config.runs_per_cell = 40;
  config.master_seed = 1;
  const double beta = 0.05;

  const auto linreg = run_cell(config, 1, beta);
  const auto lnn2 = run_cell(config, 2, beta);
  const auto lnn10 = run_cell(config, 10, beta);

  const double mse1 = linreg.summary.mean_test_mse;
  const double mse2 = lnn2.summary.mean_test_mse;
  const double mse10 = lnn10.summary.mean_test_mse;
  {
    const bool pass = mse2 <= 3.0 * mse1 && mse10 >= 10.0 * mse1;
    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "mean test MSE: LinReg %.4g, LNN-2 %.4g (%.2fx), LNN-10 "
                  "%.4g (%.0fx)",
                  mse1, mse2, mse2 / mse1, mse10, mse10 / mse1);
    report(6, "depth degradation at beta=0.05", pass, detail);
  }
  {
    const double d1 = linreg.summary.mean_final_deviation;
    const double d2 = lnn2.summary.mean_final_deviation;
    const double d10 = lnn10.summary.mean_final_deviation;
    const bool pass = d1 < 0.01 && d2 < 0.01 && d10 > 0.1;
    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "mean final D: LinReg %.2e, LNN-2 %.2e, LNN-10 %.2e", d1, d2,
                  d10);
    report(7, "deviation split between shallow and deep", pass, detail);
  }
}

// 8. Two identical CLI invocations yield byte-identical table.csv.
void criterion_determinism() {
  const fs::path base =
      fs::temp_directory_path() /
      ("lnnbench_accept_" + std::to_string(static_cast<long>(::getpid())));
  const fs::path out1 = base / "first";
  const fs::path out2 = base / "second";
  fs::create_directories(base);

  const std::string args =
      " experiment --runs 3 --depths 1,2 --betas 0.05,0.15 --train-size 200"
      " --test-size 50 --iters 2000 --seed 123 --workers 2 --out ";
  const std::string quiet = " > /dev/null 2>&1";
  const int rc1 =
      std::system((std::string(LNNBENCH_BIN) + args + out1.string() + quiet)
                      .c_str());
  const int rc2 =
      std::system((std::string(LNNBENCH_BIN) + args + out2.string() + quiet)
                      .c_str());

  bool pass = rc1 == 0 && rc2 == 0;
  std::string detail;
  if (!pass) {
    detail = "CLI invocation failed";
  } else {
    std::ifstream f1(out1 / "table.csv", std::ios::binary);
    std::ifstream f2(out2 / "table.csv", std::ios::binary);
    std::stringstream s1, s2;
    s1 << f1.rdbuf();
    s2 << f2.rdbuf();
    pass = f1.good() && f2.good() && !s1.str().empty() &&
           s1.str() == s2.str();
    detail = pass ? "table.csv byte-identical across invocations"
                  : "table.csv differs between invocations";
  }
  fs::remove_all(base);
  report(8, "experiment determinism", pass, detail);
}

}  // namespace

int main() {
  criterion_gradients();
  criterion_collapse();
  criterion_stationarity();
  criterion_noiseless_recovery();
  criterion_linreg_noise_floor();
  criteria_depth_degradation_and_deviation();
  criterion_determinism();

  std::printf("ACCEPTANCE: %d/8 criteria passed\n", 8 - g_failures);
  return g_failures == 0 ? 0 : 1;
}
