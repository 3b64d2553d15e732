#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "varprune/config.hpp"
#include "varprune/diagnostics.hpp"
#include "varprune/trainer.hpp"

namespace varprune {

// Shortest round-trip decimal form (std::to_chars); the formatter used for
// every CSV number so identical runs emit identical bytes.
std::string format_number(double v);

// One aggregated sweep result. CSV header, exact:
//   method,lambda,seed,prune_rate,metric_name,metric_value,var_w,dense_metric
struct ResultRow {
  std::string method;
  double lambda = 0.0;
  std::uint64_t seed = 0;
  double prune_rate = 0.0;
  std::string metric_name;
  double metric_value = 0.0;
  double var_w = 0.0;
  double dense_metric = 0.0;
};

// Metric set for a dataset: {accuracy} for classification, {f1, tversky,
// hausdorff} (means over samples, alpha = beta = 0.5) for segmentation.
std::vector<std::pair<std::string, double>> evaluate_all_metrics(
    const Net& net, const ParamSet& params, const Dataset& data);

// One evaluation per rate from the same trained weights, no retraining.
// Masks come from the pruner per rate; rows are sorted by rate and carry
// the dense (unpruned) metric for comparison.
std::vector<ResultRow> prune_sweep(const ParamSet& trained, const Net& net,
                                   std::span<const double> rates, const PruneSpec& scope,
                                   const Dataset& eval_data, const std::string& method,
                                   double lambda, std::uint64_t seed);

struct ExperimentOutputs {
  std::vector<ResultRow> rows;
  std::vector<std::filesystem::path> files;
  std::size_t diverged_runs = 0;
};

// Full pipeline: one training run per (lambda, seed) writing checkpoint,
// training-log CSV and histogram CSV, then a prune sweep over the saved
// weights. Deterministic given the config; rows are sorted by
// (lambda, seed, rate, metric).
ExperimentOutputs run_experiment(const ExperimentConfig& cfg);

// CSV emitters; headers are part of the external format contract:
//   training log  epoch,train_loss,psi,lr,var_w,eval_metric
//   histogram     bin_left,bin_right,count
void write_training_log_csv(const std::filesystem::path& path, const RunRecord& record);
void write_histogram_csv(const std::filesystem::path& path, const Histogram& hist);
void write_sweep_csv(const std::filesystem::path& path, std::span<const ResultRow> rows);

std::string method_name(OptimizerKind optimizer, double lambda);

}  // namespace varprune
