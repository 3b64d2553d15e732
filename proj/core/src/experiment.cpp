#include "varprune/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>

#include "varprune/checkpoint.hpp"
#include "varprune/errors.hpp"
#include "varprune/metrics.hpp"

namespace varprune {

std::string format_number(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw NumericError("format_number: conversion failed");
  return std::string(buf, p);
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace

void write_training_log_csv(const std::filesystem::path& path, const RunRecord& record) {
  auto out = open_out(path);
  out << "epoch,train_loss,psi,lr,var_w,eval_metric\n";
  for (const auto& r : record.rows) {
    out << r.epoch << ',' << format_number(r.train_loss) << ','
        << format_number(r.psi_value) << ',' << format_number(r.lr) << ','
        << format_number(r.model_variance) << ',' << format_number(r.eval_metric) << '\n';
  }
  finish(out, path);
}

void write_histogram_csv(const std::filesystem::path& path, const Histogram& hist) {
  auto out = open_out(path);
  out << "bin_left,bin_right,count\n";
  for (std::size_t i = 0; i < hist.counts.size(); ++i) {
    out << format_number(hist.bin_edges[i]) << ',' << format_number(hist.bin_edges[i + 1])
        << ',' << hist.counts[i] << '\n';
  }
  finish(out, path);
}

void write_sweep_csv(const std::filesystem::path& path, std::span<const ResultRow> rows) {
  auto out = open_out(path);
  out << "method,lambda,seed,prune_rate,metric_name,metric_value,var_w,dense_metric\n";
  for (const auto& r : rows) {
    out << r.method << ',' << format_number(r.lambda) << ',' << r.seed << ','
        << format_number(r.prune_rate) << ',' << r.metric_name << ','
        << format_number(r.metric_value) << ',' << format_number(r.var_w) << ','
        << format_number(r.dense_metric) << '\n';
  }
  finish(out, path);
}

std::string method_name(OptimizerKind optimizer, double lambda) {
  std::string name = optimizer == OptimizerKind::sam ? "sam" : "sgd";
  if (lambda != 0.0) name += "+var";
  return name;
}

std::vector<std::pair<std::string, double>> evaluate_all_metrics(
    const Net& net, const ParamSet& params, const Dataset& data) {
  const Tensor scores = forward(net, params, data.inputs);
  if (!data.labels.empty())
    return {{"accuracy", accuracy(predict_labels(scores), data.labels)}};

  const std::size_t n = scores.rows(), pixels = scores.cols();
  const std::size_t w = data.grid_w > 0 ? data.grid_w : pixels;
  const std::size_t h = data.grid_h > 0 ? data.grid_h : 1;
  if (w * h != pixels) throw DimensionError("evaluate_all_metrics: grid extents mismatch");

  double f1_sum = 0.0, tversky_sum = 0.0, hausdorff_sum = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const BinaryMask pred = binarize_scores({&scores.data[r * pixels], pixels}, w, h);
    BinaryMask gt = BinaryMask::zeros(w, h);
    for (std::size_t p = 0; p < pixels; ++p)
      gt.values[p] = data.mask_targets.data[r * pixels + p] > 0.5f ? 1 : 0;
    f1_sum += f1_binary(pred, gt);
    tversky_sum += tversky(pred, gt, 0.5, 0.5);
    hausdorff_sum += hausdorff(pred, gt);
  }
  const double dn = static_cast<double>(n);
  return {{"f1", f1_sum / dn}, {"tversky", tversky_sum / dn}, {"hausdorff", hausdorff_sum / dn}};
}

std::vector<ResultRow> prune_sweep(const ParamSet& trained, const Net& net,
                                   std::span<const double> rates, const PruneSpec& scope,
                                   const Dataset& eval_data, const std::string& method,
                                   double lambda, std::uint64_t seed) {
  const double var_w = model_variance(trained);
  const auto dense = evaluate_all_metrics(net, trained, eval_data);

  std::vector<double> sorted_rates(rates.begin(), rates.end());
  std::sort(sorted_rates.begin(), sorted_rates.end());

  std::vector<ResultRow> rows;
  for (double rate : sorted_rates) {
    PruneSpec spec = scope;
    spec.rate = rate;
    const Mask mask = make_mask(trained, spec);
    ParamSet pruned = trained;
    apply_mask(pruned, mask);
    const auto metrics = evaluate_all_metrics(net, pruned, eval_data);
    for (std::size_t m = 0; m < metrics.size(); ++m) {
      rows.push_back({method, lambda, seed, rate, metrics[m].first, metrics[m].second,
                      var_w, dense[m].second});
    }
  }
  return rows;
}

ExperimentOutputs run_experiment(const ExperimentConfig& cfg) {
  namespace fs = std::filesystem;
  const fs::path out_dir(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output dir '" + out_dir.string() + "': " + ec.message());

  ExperimentOutputs outputs;
  for (double lambda : cfg.lambdas) {
    for (std::uint64_t seed : cfg.seeds) {
      RngState data_rng(seed);
      const Dataset train_data = cfg.make_train_data(data_rng);
      const Dataset eval_data = cfg.make_eval_data(data_rng);

      OptimConfig run_cfg = cfg.train;
      run_cfg.lambda = lambda;
      run_cfg.seed = seed;
      const RegConfig reg = cfg.reg_config(lambda);

      Net net = cfg.layers;
      TrainResult result = train(net, train_data, run_cfg, reg, &eval_data);
      if (cfg.prune_biases)
        for (auto& e : result.params.entries)
          if (e.name.ends_with(".bias")) e.prunable = true;

      const std::string tag =
          "lambda" + format_number(lambda) + "_seed" + std::to_string(seed);
      const fs::path ckpt = out_dir / ("checkpoint_" + tag + ".varw");
      const fs::path log = out_dir / ("train_" + tag + ".csv");
      const fs::path hist_path = out_dir / ("hist_" + tag + ".csv");
      save_checkpoint(result.params, ckpt);
      write_training_log_csv(log, result.record);
      write_histogram_csv(hist_path,
                          weight_histogram(result.params, symmetric_edges(result.params, 61)));
      outputs.files.insert(outputs.files.end(), {ckpt, log, hist_path});

      if (result.record.diverged) {
        ++outputs.diverged_runs;
        continue;  // partial outputs above stay on disk, flagged via the count
      }

      const auto rows = prune_sweep(result.params, net, cfg.prune_rates,
                                    cfg.prune_spec(0.0), eval_data,
                                    method_name(run_cfg.optimizer, lambda), lambda, seed);
      outputs.rows.insert(outputs.rows.end(), rows.begin(), rows.end());
    }
  }

  std::stable_sort(outputs.rows.begin(), outputs.rows.end(),
                   [](const ResultRow& a, const ResultRow& b) {
                     if (a.lambda != b.lambda) return a.lambda < b.lambda;
                     if (a.seed != b.seed) return a.seed < b.seed;
                     return a.prune_rate < b.prune_rate;
                   });
  const fs::path sweep_path = out_dir / "sweep.csv";
  write_sweep_csv(sweep_path, outputs.rows);
  outputs.files.push_back(sweep_path);
  return outputs;
}

}  // namespace varprune
