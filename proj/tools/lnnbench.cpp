#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lnnbench/dataset.hpp"
#include "lnnbench/emit.hpp"
#include "lnnbench/harness.hpp"
#include "lnnbench/models.hpp"
#include "lnnbench/optim.hpp"
#include "lnnbench/oracle.hpp"
#include "lnnbench/version.hpp"

namespace fs = std::filesystem;
using namespace lnnbench;

namespace {

struct GenerateFlags {
  int n = 1000;
  double beta = 0.0;
  std::uint64_t seed = 1;
  std::optional<double> a;
  std::optional<double> b;
  std::string out = "dataset.csv";
};

struct TrainFlags {
  int depth = 1;
  double beta = 0.0;
  int train_size = 1000;
  int test_size = 200;
  std::uint64_t seed = 1;
  std::string trace = "trace.csv";
  std::string params_out;
};

struct ExperimentFlags {
  ExperimentConfig config;
  std::string out;
  std::string config_file;
  std::vector<std::string> replay;  // cell name + run index
};

std::string strip(const std::string& text) {
  const auto begin = text.find_first_not_of(" \t\r");
  if (begin == std::string::npos) {
    return "";
  }
  const auto end = text.find_last_not_of(" \t\r");
  return text.substr(begin, end - begin + 1);
}

template <typename T>
T parse_number(const std::string& text, const std::string& key) {
  T value{};
  std::istringstream in(text);
  in >> value;
  if (in.fail() || !in.eof()) {
    throw std::invalid_argument("config: bad value '" + text + "' for " + key);
  }
  return value;
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const std::string& key) {
  std::vector<T> values;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    values.push_back(parse_number<T>(strip(item), key));
  }
  return values;
}

/// Flat key=value config mirroring the experiment flags one-to-one
/// (keys are the long flag names without the dashes, lists stay
/// comma-separated). Flags given on the command line win over the file.
void apply_config_file(const std::string& path, const CLI::App* cmd,
                       ExperimentFlags& flags, std::string& init_name) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open config file " + path);
  }
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string text = strip(line);
    if (text.empty() || text[0] == '#') {
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": expected key=value");
    }
    const std::string key = strip(text.substr(0, eq));
    const std::string value = strip(text.substr(eq + 1));
    const CLI::Option* flag = cmd->get_option_no_throw("--" + key);
    if (flag == nullptr) {
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": unknown key '" + key + "'");
    }
    if (flag->count() > 0) {
      continue;
    }
    if (key == "runs") {
      flags.config.runs_per_cell = parse_number<int>(value, key);
    } else if (key == "depths") {
      flags.config.depths = parse_list<int>(value, key);
    } else if (key == "betas") {
      flags.config.noise_coefficients = parse_list<double>(value, key);
    } else if (key == "train-size") {
      flags.config.train_size = parse_number<int>(value, key);
    } else if (key == "test-size") {
      flags.config.test_size = parse_number<int>(value, key);
    } else if (key == "seed") {
      flags.config.master_seed = parse_number<std::uint64_t>(value, key);
    } else if (key == "workers") {
      flags.config.workers = parse_number<int>(value, key);
    } else if (key == "traces") {
      flags.config.traces_per_cell = parse_number<int>(value, key);
    } else if (key == "out") {
      flags.out = value;
    } else if (key == "lr") {
      flags.config.train_config.learning_rate = parse_number<double>(value, key);
    } else if (key == "iters") {
      flags.config.train_config.max_iterations = parse_number<long>(value, key);
    } else if (key == "tol") {
      flags.config.train_config.convergence_tol =
          parse_number<double>(value, key);
    } else if (key == "window") {
      flags.config.train_config.convergence_window =
          parse_number<int>(value, key);
    } else if (key == "div-threshold") {
      flags.config.train_config.divergence_threshold =
          parse_number<double>(value, key);
    } else if (key == "init") {
      init_name = value;
    } else {
      // --config and --replay themselves have no config-file meaning
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": key '" + key +
                                  "' cannot be set from a config file");
    }
  }
}

InitScheme parse_init_scheme(const std::string& name) {
  if (name == "uniform") {
    return InitScheme::kUniform;
  }
  if (name == "normal") {
    return InitScheme::kNormal;
  }
  throw std::invalid_argument("unknown init scheme '" + name +
                              "' (expected uniform or normal)");
}

void add_train_config_options(CLI::App* cmd, TrainConfig& config,
                              std::string& init_name) {
  cmd->add_option("--lr", config.learning_rate,
                  "gradient descent learning rate")
      ->capture_default_str();
  cmd->add_option("--iters", config.max_iterations, "iteration budget")
      ->capture_default_str();
  cmd->add_option("--tol", config.convergence_tol,
                  "relative train-loss change below which an iteration "
                  "counts toward convergence")
      ->capture_default_str();
  cmd->add_option("--window", config.convergence_window,
                  "consecutive below-tolerance iterations required to "
                  "declare convergence")
      ->capture_default_str();
  cmd->add_option("--div-threshold", config.divergence_threshold,
                  "train loss above which a run is recorded as diverged")
      ->capture_default_str();
  cmd->add_option("--init", init_name,
                  "parameter initialization scheme (uniform|normal)")
      ->capture_default_str();
}

int cmd_generate(const GenerateFlags& flags) {
  const std::uint64_t data_seed = run_data_seed(flags.seed, flags.beta, 0);
  double a, b;
  if (flags.a && flags.b) {
    a = *flags.a;
    b = *flags.b;
  } else if (!flags.a && !flags.b) {
    auto rng = make_engine(derive_seed(data_seed, kStreamTrueParams));
    std::tie(a, b) = sample_true_params(rng);
  } else {
    throw std::invalid_argument("--a and --b must be given together");
  }

  const Dataset data =
      generate_dataset(static_cast<std::size_t>(flags.n), a, b, flags.beta,
                       derive_seed(data_seed, kStreamTrainData));
  const LinearParams oracle = normal_equation(data);
  write_dataset_csv(data, flags.out, flags.seed);

  std::printf("sampled a=%.6g b=%.6g\n", a, b);
  std::printf("oracle a_star=%.6g b_star=%.6g\n", oracle.slope,
              oracle.intercept);
  std::printf("wrote %s (n=%d beta=%s)\n", flags.out.c_str(), flags.n,
              format_double(flags.beta).c_str());
  return 0;
}

int cmd_train(const TrainFlags& flags, const TrainConfig& train_config) {
  SingleRunSpec spec;
  spec.depth = flags.depth;
  spec.beta = flags.beta;
  spec.train_size = flags.train_size;
  spec.test_size = flags.test_size;
  spec.train_config = train_config;
  spec.train_config.seed = flags.seed;
  spec.data_seed = run_data_seed(flags.seed, flags.beta, 0);
  spec.init_seed = run_init_seed(flags.seed, flags.depth, flags.beta, 0);

  const SingleRunOutcome outcome = run_single(spec);
  write_trace_csv(outcome.result.trace, fs::path(flags.trace));
  if (!flags.params_out.empty()) {
    write_lnn_params(outcome.result.final_params, fs::path(flags.params_out));
  }

  const TracePoint& last = outcome.result.trace.back();
  const LinearParams line = collapse(outcome.result.final_params);
  std::printf("a=%.6g b=%.6g a_star=%.6g b_star=%.6g\n", outcome.true_weight,
              outcome.true_bias, outcome.oracle.slope,
              outcome.oracle.intercept);
  std::printf("m=%.6g c=%.6g\n", line.slope, line.intercept);
  std::printf("status=%s iterations=%ld train_mse=%.6g test_mse=%.6g D=%.6g\n",
              to_string(outcome.result.status), outcome.result.iterations_used,
              last.train_mse, last.test_mse, last.deviation);
  std::printf("wrote %s\n", flags.trace.c_str());
  return 0;
}

// "LinReg_beta0.05" / "LNN-7_beta0.3" -> (depth, beta)
std::pair<int, double> parse_cell_name(const std::string& name) {
  const std::string marker = "_beta";
  const std::size_t pos = name.find(marker);
  if (pos == std::string::npos) {
    throw std::invalid_argument("bad cell name '" + name +
                                "' (expected <model>_beta<value>)");
  }
  const std::string model = name.substr(0, pos);
  const std::string beta_text = name.substr(pos + marker.size());
  int depth = 0;
  if (model == "LinReg") {
    depth = 1;
  } else if (model.rfind("LNN-", 0) == 0) {
    depth = std::stoi(model.substr(4));
  } else {
    throw std::invalid_argument("bad model in cell name '" + name + "'");
  }
  std::size_t consumed = 0;
  const double beta = std::stod(beta_text, &consumed);
  if (consumed != beta_text.size()) {
    throw std::invalid_argument("bad beta in cell name '" + name + "'");
  }
  return {depth, beta};
}

std::string run_file_name(int run_index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "run_%03d.csv", run_index);
  return buf;
}

int cmd_replay(const ExperimentConfig& config, const std::string& cell,
               int run_index, const fs::path& out_dir) {
  if (run_index < 0 || run_index >= config.runs_per_cell) {
    throw std::invalid_argument("replay run index out of range");
  }
  const auto [depth, beta] = parse_cell_name(cell);

  SingleRunSpec spec;
  spec.depth = depth;
  spec.beta = beta;
  spec.train_size = config.train_size;
  spec.test_size = config.test_size;
  spec.train_config = config.train_config;
  spec.data_seed = run_data_seed(config.master_seed, beta, run_index);
  spec.init_seed = run_init_seed(config.master_seed, depth, beta, run_index);

  const SingleRunOutcome outcome = run_single(spec);
  const fs::path dir = out_dir / "runs" / cell_name(depth, beta);
  fs::create_directories(dir);
  const fs::path trace_path = dir / run_file_name(run_index);
  write_trace_csv(outcome.result.trace, trace_path);

  const TracePoint& last = outcome.result.trace.back();
  std::printf("replayed %s run %d: status=%s iterations=%ld test_mse=%.6g "
              "D=%.6g\n",
              cell.c_str(), run_index, to_string(outcome.result.status),
              outcome.result.iterations_used, last.test_mse, last.deviation);
  std::printf("wrote %s\n", trace_path.string().c_str());
  return 0;
}

void print_table(const std::vector<CellSummary>& summaries) {
  std::vector<double> betas;
  std::vector<int> depths;
  for (const CellSummary& cell : summaries) {
    if (std::find(betas.begin(), betas.end(), cell.noise_coefficient) ==
        betas.end()) {
      betas.push_back(cell.noise_coefficient);
    }
    if (std::find(depths.begin(), depths.end(), cell.depth) == depths.end()) {
      depths.push_back(cell.depth);
    }
  }
  std::sort(betas.begin(), betas.end());
  std::sort(depths.begin(), depths.end());

  std::printf("%-8s", "model");
  for (double beta : betas) {
    std::printf("  %-18s", ("beta=" + format_double(beta)).c_str());
  }
  std::printf("\n");
  for (int depth : depths) {
    std::printf("%-8s", model_label(depth).c_str());
    for (double beta : betas) {
      const CellSummary* found = nullptr;
      for (const CellSummary& cell : summaries) {
        if (cell.depth == depth && cell.noise_coefficient == beta) {
          found = &cell;
          break;
        }
      }
      if (found) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.4g +/-%.4g", found->mean_test_mse,
                      found->std_test_mse);
        std::printf("  %-18s", buf);
      } else {
        std::printf("  %-18s", "-");
      }
    }
    std::printf("\n");
  }
}

int cmd_experiment(const ExperimentFlags& flags) {
  const fs::path out_dir = flags.out;

  if (!flags.replay.empty()) {
    return cmd_replay(flags.config, flags.replay[0],
                      std::stoi(flags.replay[1]), out_dir);
  }

  fs::create_directories(out_dir);
  const auto trace_sink = [&](const CellResult& cell) {
    if (flags.config.traces_per_cell <= 0) {
      return;
    }
    const fs::path dir =
        out_dir / "runs" /
        cell_name(cell.summary.depth, cell.summary.noise_coefficient);
    fs::create_directories(dir);
    const int keep = std::min<int>(flags.config.traces_per_cell,
                                   static_cast<int>(cell.runs.size()));
    for (int i = 0; i < keep; ++i) {
      write_trace_csv(cell.runs[static_cast<std::size_t>(i)].result.trace,
                      dir / run_file_name(i));
    }
  };

  const ExperimentResult result = run_experiment(flags.config, trace_sink);
  for (const CellFailure& failure : result.failures) {
    std::fprintf(stderr, "cell %s failed: %s\n",
                 cell_name(failure.depth, failure.beta).c_str(),
                 failure.message.c_str());
  }

  emit_table(result.summaries, out_dir / "table.csv");
  emit_plots(result.summaries, out_dir);
  emit_metadata(flags.config, result.failures, kVersion,
                out_dir / "metadata.json");

  print_table(result.summaries);
  std::printf("results written to %s\n", out_dir.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Linear regression versus deep linear networks on synthetic "
               "noisy-linear data"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  GenerateFlags gen;
  CLI::App* gen_cmd =
      app.add_subcommand("generate", "generate a synthetic dataset CSV");
  gen_cmd->add_option("--n", gen.n, "number of samples")->capture_default_str();
  gen_cmd->add_option("--beta", gen.beta, "noise coefficient")
      ->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "random seed")->capture_default_str();
  gen_cmd->add_option("--a", gen.a, "generating slope (default: sampled)");
  gen_cmd->add_option("--b", gen.b, "generating intercept (default: sampled)");
  gen_cmd->add_option("--out", gen.out, "output CSV path")
      ->capture_default_str();

  TrainFlags tr;
  TrainConfig tr_config;
  std::string tr_init = "uniform";
  CLI::App* tr_cmd = app.add_subcommand(
      "train", "run one data->oracle->init->train experiment");
  tr_cmd->add_option("--depth", tr.depth, "model depth (1 = linear regression)")
      ->capture_default_str();
  tr_cmd->add_option("--beta", tr.beta, "noise coefficient")
      ->capture_default_str();
  tr_cmd->add_option("--train-size", tr.train_size, "training samples")
      ->capture_default_str();
  tr_cmd->add_option("--test-size", tr.test_size, "evaluation samples")
      ->capture_default_str();
  tr_cmd->add_option("--seed", tr.seed, "run seed")->capture_default_str();
  tr_cmd->add_option("--trace", tr.trace, "per-iteration trace CSV path")
      ->capture_default_str();
  tr_cmd->add_option("--params", tr.params_out,
                     "also dump final layer parameters to this path");
  add_train_config_options(tr_cmd, tr_config, tr_init);

  ExperimentFlags exp;
  std::string exp_init = "uniform";
  const char* env_out = std::getenv("LNNBENCH_OUT");
  exp.out = env_out ? env_out : "results";
  CLI::App* exp_cmd = app.add_subcommand(
      "experiment", "run the full model-by-noise experiment grid");
  exp_cmd->add_option("--config", exp.config_file,
                      "config file with key=value lines mirroring the flags");
  exp_cmd->add_option("--betas", exp.config.noise_coefficients,
                      "noise coefficients")
      ->delimiter(',')
      ->capture_default_str();
  exp_cmd->add_option("--depths", exp.config.depths,
                      "model depths (1 = linear regression)")
      ->delimiter(',')
      ->capture_default_str();
  exp_cmd->add_option("--runs", exp.config.runs_per_cell, "runs per grid cell")
      ->capture_default_str();
  exp_cmd->add_option("--train-size", exp.config.train_size,
                      "training samples per run")
      ->capture_default_str();
  exp_cmd->add_option("--test-size", exp.config.test_size,
                      "evaluation samples per run")
      ->capture_default_str();
  exp_cmd->add_option("--seed", exp.config.master_seed, "master seed")
      ->capture_default_str();
  exp_cmd->add_option("--workers", exp.config.workers,
                      "worker threads (0 = all cores)")
      ->capture_default_str();
  exp_cmd->add_option("--traces", exp.config.traces_per_cell,
                      "per-cell count of run traces to write under runs/")
      ->capture_default_str();
  exp_cmd->add_option("--out", exp.out, "results directory")
      ->envname("LNNBENCH_OUT")
      ->capture_default_str();
  exp_cmd
      ->add_option("--replay", exp.replay,
                   "regenerate one run's trace: <cell> <run-index>")
      ->expected(2);
  add_train_config_options(exp_cmd, exp.config.train_config, exp_init);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*gen_cmd) {
      return cmd_generate(gen);
    }
    if (*tr_cmd) {
      tr_config.init_scheme = parse_init_scheme(tr_init);
      return cmd_train(tr, tr_config);
    }
    if (!exp.config_file.empty()) {
      apply_config_file(exp.config_file, exp_cmd, exp, exp_init);
    }
    exp.config.train_config.init_scheme = parse_init_scheme(exp_init);
    exp.config.train_config.seed = exp.config.master_seed;
    return cmd_experiment(exp);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
