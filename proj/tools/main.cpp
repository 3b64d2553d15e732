#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "varprune/checkpoint.hpp"
#include "varprune/config.hpp"
#include "varprune/convergence.hpp"
#include "varprune/datasets.hpp"
#include "varprune/diagnostics.hpp"
#include "varprune/errors.hpp"
#include "varprune/experiment.hpp"

using namespace varprune;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitNumeric = 2;
constexpr int kExitIo = 3;

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

ExperimentConfig load_config(const CommonArgs& args) {
  if (args.config_path.empty()) throw ConfigError("--config is required");
  ExperimentConfig cfg = parse_config_file(args.config_path);
  if (args.seed_set) cfg.seeds = {args.seed};
  if (!args.out_dir.empty()) cfg.output_dir = args.out_dir;
  return cfg;
}

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "experiment config file")->required();
  cmd->add_option("--seed", args.seed, "override the config seed list with one seed")
      ->each([&args](const std::string&) { args.seed_set = true; });
  cmd->add_option("--out", args.out_dir, "override the config output directory");
}

int cmd_train(const CommonArgs& args) {
  ExperimentConfig cfg = load_config(args);
  cfg.prune_rates.clear();  // training artifacts only
  const auto outputs = run_experiment(cfg);
  for (const auto& f : outputs.files) std::cout << f.string() << "\n";
  if (outputs.diverged_runs > 0) {
    std::cerr << "warning: " << outputs.diverged_runs
              << " run(s) diverged; partial outputs kept\n";
    return kExitNumeric;
  }
  return kExitOk;
}

int cmd_sweep(const CommonArgs& args) {
  const ExperimentConfig cfg = load_config(args);
  const auto outputs = run_experiment(cfg);
  std::cout << "rows: " << outputs.rows.size() << "\n";
  for (const auto& f : outputs.files) std::cout << f.string() << "\n";
  if (outputs.diverged_runs > 0) {
    std::cerr << "warning: " << outputs.diverged_runs
              << " run(s) diverged; partial outputs kept\n";
    return kExitNumeric;
  }
  return kExitOk;
}

int cmd_prune(const CommonArgs& args, const std::string& checkpoint_path, double rate) {
  const ExperimentConfig cfg = load_config(args);
  ParamSet params = load_checkpoint(checkpoint_path);
  if (cfg.prune_biases)
    for (auto& e : params.entries)
      if (e.name.ends_with(".bias")) e.prunable = true;

  const Mask mask = make_mask(params, cfg.prune_spec(rate));
  apply_mask(params, mask);

  const fs::path out_dir(cfg.output_dir);
  fs::create_directories(out_dir);
  const std::string stem = fs::path(checkpoint_path).stem().string();
  const fs::path mask_path = out_dir / (stem + "_rate" + format_number(rate) + ".varm");
  const fs::path pruned_path = out_dir / (stem + "_rate" + format_number(rate) + ".varw");
  save_mask(mask, mask_path);
  save_checkpoint(params, pruned_path);
  std::cout << mask_path.string() << "\n" << pruned_path.string() << "\n";
  std::cout << "pruned " << mask.zeros() << " of " << params.prunable_values()
            << " prunable weights\n";
  return kExitOk;
}

// Smooths one column of a per-epoch CSV (Figure-4 style traces) and writes
// epoch,raw,ema,gamma rows next to the other artifacts.
int cmd_smooth(const CommonArgs& args, const std::string& csv_path,
               const std::string& column, double gamma) {
  const ExperimentConfig cfg = load_config(args);
  std::ifstream in(csv_path);
  if (!in) throw IoError("cannot open '" + csv_path + "' for reading");

  std::string header;
  if (!std::getline(in, header)) throw IoError("'" + csv_path + "': empty file");
  std::vector<std::string> names;
  std::stringstream hs(header);
  for (std::string cell; std::getline(hs, cell, ',');) names.push_back(cell);
  std::size_t col = names.size();
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == column) col = i;
  if (col == names.size())
    throw ConfigError("column '" + column + "' not found in '" + csv_path + "'");

  std::vector<double> series;
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::string cell;
    for (std::size_t i = 0; i <= col; ++i)
      if (!std::getline(ls, cell, ','))
        throw IoError("'" + csv_path + "': short row " + std::to_string(series.size()));
    series.push_back(std::stod(cell));
  }
  const auto smoothed = ema(series, gamma);

  const fs::path out_dir(cfg.output_dir);
  fs::create_directories(out_dir);
  const fs::path out_path =
      out_dir / (fs::path(csv_path).stem().string() + "_" + column + "_ema.csv");
  std::ofstream out(out_path);
  if (!out) throw IoError("cannot open '" + out_path.string() + "' for writing");
  out << "epoch,raw,ema,gamma\n";
  for (std::size_t t = 0; t < series.size(); ++t)
    out << t << ',' << format_number(series[t]) << ',' << format_number(smoothed[t])
        << ',' << format_number(gamma) << "\n";
  std::cout << out_path.string() << "\n";
  return kExitOk;
}

int cmd_diagnose(const CommonArgs& args, const std::string& checkpoint_path,
                 std::size_t bins, bool include_reg, double reg_lambda) {
  const ExperimentConfig cfg = load_config(args);
  const ParamSet params = load_checkpoint(checkpoint_path);

  const fs::path out_dir(cfg.output_dir);
  fs::create_directories(out_dir);
  const std::string stem = fs::path(checkpoint_path).stem().string();

  const Histogram hist = weight_histogram(params, symmetric_edges(params, bins));
  const fs::path hist_path = out_dir / (stem + "_hist.csv");
  write_histogram_csv(hist_path, hist);

  RngState data_rng(cfg.seeds.front());
  const Dataset data = cfg.make_train_data(data_rng);
  SharpnessProbe probe;
  probe.include_regularizer = include_reg;
  RngState probe_rng(cfg.seeds.front() + 1);
  RegConfig reg = cfg.reg_config(reg_lambda);
  const auto est =
      top_hessian_eigenvalue(cfg.layers, params, data.full_batch(), data.loss_kind(),
                             probe, probe_rng, include_reg ? &reg : nullptr);

  const double var_w = model_variance(params);
  const fs::path diag_path = out_dir / (stem + "_diagnostics.csv");
  {
    std::ofstream out(diag_path);
    if (!out) throw IoError("cannot open '" + diag_path.string() + "' for writing");
    out << "var_w,top_hessian_eigenvalue,eigen_iterations,eigen_converged\n";
    out << format_number(var_w) << ',' << format_number(est.value) << ','
        << est.iterations << ',' << (est.converged ? 1 : 0) << "\n";
  }
  std::cout << hist_path.string() << "\n" << diag_path.string() << "\n";
  std::cout << "var_w " << format_number(var_w) << ", top eigenvalue "
            << format_number(est.value) << (est.converged ? "" : " (not converged)")
            << "\n";
  return kExitOk;
}

int cmd_gen_data(const CommonArgs& args) {
  const ExperimentConfig cfg = load_config(args);
  const fs::path out_dir(cfg.output_dir);
  fs::create_directories(out_dir);

  RngState rng(cfg.seeds.front());
  const Dataset data = cfg.make_train_data(rng);
  const fs::path path = out_dir / (cfg.data.kind + "_seed" +
                                   std::to_string(cfg.seeds.front()) + ".csv");
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  const std::size_t features = data.inputs.cols();
  if (!data.labels.empty()) {
    for (std::size_t f = 0; f < features; ++f) out << 'x' << f << ',';
    out << "label\n";
    for (std::size_t i = 0; i < data.size(); ++i) {
      for (std::size_t f = 0; f < features; ++f)
        out << format_number(data.inputs.data[i * features + f]) << ',';
      out << data.labels[i] << "\n";
    }
  } else {
    out << "sample,pixel,intensity,mask\n";
    for (std::size_t i = 0; i < data.size(); ++i)
      for (std::size_t p = 0; p < features; ++p)
        out << i << ',' << p << ','
            << format_number(data.inputs.data[i * features + p]) << ','
            << format_number(data.mask_targets.data[i * features + p]) << "\n";
  }
  std::cout << path.string() << "\n";
  return kExitOk;
}

// Built-in benchmark suites for the convergence checks; emits one CSV per
// check plus a console summary.
int cmd_converge(const std::string& out_dir_arg, std::uint64_t seed) {
  const fs::path out_dir(out_dir_arg.empty() ? "out" : out_dir_arg);
  fs::create_directories(out_dir);
  RngState rng(seed);

  // Descent certification on random PSD quadratics, with and without psi.
  const fs::path descent_path = out_dir / "descent_report.csv";
  {
    std::ofstream out(descent_path);
    if (!out) throw IoError("cannot open '" + descent_path.string() + "' for writing");
    out << "instance,lambda,eta,steps,violations,min_margin\n";
    std::size_t total_violations = 0;
    for (int inst = 0; inst < 10; ++inst) {
      const auto quad = make_random_psd_quadratic(10, 0.1, 4.0, rng);
      std::vector<double> w0(10);
      for (auto& x : w0) x = rng.normal(0.0, 2.0);
      for (const double lambda : {0.0, 1e-3}) {
        double eta = 1.0 / quad.beta1();
        if (lambda != 0.0) {
          GradientFn psi_field = [](std::span<const double> w, std::span<double> g) {
            psi_layer_grad(w, 1e-8, 1e-8, g);
          };
          const auto samples = sample_ball(w0, 2.0, 24, rng);
          eta = 1.0 / (quad.beta1() + lambda * estimate_beta(psi_field, samples));
        }
        const CompositeObjective total(quad, lambda);
        const auto report = descent_check(total, w0, eta, 1000);
        total_violations += report.violations;
        out << inst << ',' << format_number(lambda) << ',' << format_number(eta) << ','
            << report.steps << ',' << report.violations << ','
            << format_number(report.min_margin) << "\n";
      }
    }
    std::cout << "descent violations: " << total_violations << "\n";
  }

  // O(1/sqrt(T)) rate table on logistic + psi.
  const fs::path rate_path = out_dir / "rate_table.csv";
  {
    RngState data_rng(seed + 1);
    const auto logistic = make_logistic_dataset(64, 4, 1.0, 0.15, data_rng);
    std::ofstream out(rate_path);
    if (!out) throw IoError("cannot open '" + rate_path.string() + "' for writing");
    out << "lambda,T,mean_avg_sq_grad\n";
    const std::size_t t_list[] = {100, 400, 1600, 6400};
    const std::uint64_t seeds[] = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    // Spread magnitudes keep the start away from the Var ~ 0 region.
    const std::vector<double> w0 = {1.2, -0.6, 0.3, -0.9};
    GradientFn psi_field = [](std::span<const double> w, std::span<double> g) {
      psi_layer_grad(w, 1e-8, 1e-8, g);
    };
    const auto beta2_samples = sample_ball(w0, 1.0, 20, data_rng);
    const double beta2 = estimate_beta(psi_field, beta2_samples);
    for (const double lambda : {0.0, 1e-5}) {
      const CompositeObjective total(logistic, lambda);
      const double c = 1.0 / (logistic.beta1_bound() + lambda * beta2);
      const auto table = rate_check(total, w0, c, t_list, seeds, 8);
      std::vector<double> ts, means;
      for (const auto& point : table) {
        out << format_number(lambda) << ',' << point.steps << ','
            << format_number(point.mean_avg_sq_grad) << "\n";
        ts.push_back(static_cast<double>(point.steps));
        means.push_back(point.mean_avg_sq_grad);
      }
      std::cout << "rate lambda=" << format_number(lambda)
                << " log-log slope: " << format_number(log_log_slope(ts, means)) << "\n";
    }
  }

  // Diminishing-step weighted averages on a quadratic.
  const fs::path dim_path = out_dir / "diminishing.csv";
  {
    RngState quad_rng(seed + 2);
    const auto quad = make_random_psd_quadratic(10, 0.2, 3.0, quad_rng);
    std::vector<double> w0(10);
    for (auto& x : w0) x = quad_rng.normal(0.0, 2.0);
    const std::size_t checkpoints[] = {100, 1000, 10000};
    const auto trace = diminishing_check(quad, w0, 1.0 / quad.beta1(), checkpoints);
    std::ofstream out(dim_path);
    if (!out) throw IoError("cannot open '" + dim_path.string() + "' for writing");
    out << "T,weighted_avg_sq_grad\n";
    for (const auto& point : trace)
      out << point.steps << ',' << format_number(point.weighted_avg_sq_grad) << "\n";
    std::cout << "diminishing trace points: " << trace.size() << "\n";
  }

  std::cout << descent_path.string() << "\n" << rate_path.string() << "\n"
            << dim_path.string() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"variance-amplified training, one-shot pruning and diagnostics"};
  app.require_subcommand(1);

  CommonArgs train_args, sweep_args, prune_args, diag_args, gen_args;
  std::string prune_checkpoint, diag_checkpoint;
  double prune_rate = 0.0;
  std::size_t diag_bins = 61;
  bool diag_include_reg = false;
  double diag_lambda = 0.0;
  std::string diag_smooth_csv, diag_smooth_column = "eval_metric";
  double diag_gamma = 0.9;
  std::string converge_out;
  std::uint64_t converge_seed = 42;

  auto* train_cmd = app.add_subcommand("train", "train once per (lambda, seed)");
  add_common(train_cmd, train_args);

  auto* prune_cmd = app.add_subcommand("prune", "one-shot prune a checkpoint");
  add_common(prune_cmd, prune_args);
  prune_cmd->add_option("--checkpoint", prune_checkpoint, "trained checkpoint")->required();
  prune_cmd->add_option("--rate", prune_rate, "pruning rate in [0, 1)")->required();

  auto* sweep_cmd = app.add_subcommand("sweep", "train then sweep pruning rates");
  add_common(sweep_cmd, sweep_args);

  auto* diag_cmd = app.add_subcommand("diagnose",
                                      "weight variance, histogram and top eigenvalue");
  add_common(diag_cmd, diag_args);
  auto* ckpt_opt = diag_cmd->add_option("--checkpoint", diag_checkpoint,
                                        "checkpoint to analyze");
  diag_cmd->add_option("--bins", diag_bins, "histogram bin count");
  diag_cmd->add_flag("--include-reg", diag_include_reg,
                     "probe the curvature of loss + lambda*psi");
  diag_cmd->add_option("--reg-lambda", diag_lambda, "lambda for --include-reg");
  auto* smooth_opt = diag_cmd->add_option("--smooth", diag_smooth_csv,
                                          "per-epoch CSV to EMA-smooth instead");
  diag_cmd->add_option("--smooth-column", diag_smooth_column,
                       "column of --smooth to smooth");
  diag_cmd->add_option("--ema-gamma", diag_gamma, "EMA decay in (0, 1)");
  ckpt_opt->excludes(smooth_opt);

  auto* conv_cmd = app.add_subcommand("converge", "run the convergence check suites");
  conv_cmd->add_option("--out", converge_out, "output directory");
  conv_cmd->add_option("--seed", converge_seed, "benchmark seed");

  auto* gen_cmd = app.add_subcommand("gen-data", "write a synthetic dataset CSV");
  add_common(gen_cmd, gen_args);

  try {
    app.parse(argc, argv);
    if (train_cmd->parsed()) return cmd_train(train_args);
    if (prune_cmd->parsed()) return cmd_prune(prune_args, prune_checkpoint, prune_rate);
    if (sweep_cmd->parsed()) return cmd_sweep(sweep_args);
    if (diag_cmd->parsed()) {
      if (!diag_smooth_csv.empty())
        return cmd_smooth(diag_args, diag_smooth_csv, diag_smooth_column, diag_gamma);
      if (diag_checkpoint.empty())
        throw ConfigError("diagnose needs --checkpoint or --smooth");
      return cmd_diagnose(diag_args, diag_checkpoint, diag_bins, diag_include_reg,
                          diag_lambda);
    }
    if (conv_cmd->parsed()) return cmd_converge(converge_out, converge_seed);
    if (gen_cmd->parsed()) return cmd_gen_data(gen_args);
    return kExitConfig;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  }
}
