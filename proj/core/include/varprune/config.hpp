#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "varprune/model.hpp"
#include "varprune/pruner.hpp"
#include "varprune/trainer.hpp"
#include "varprune/var_reg.hpp"

namespace varprune {

// Flat key = value experiment description. '#' starts a comment; keys are
// dotted; unknown keys are rejected. Recognized keys:
//
//   model.layers            dense:IN:OUT | relu | tanh | sigmoid | identity,
//                           comma separated
//   model.prune_biases      true/false: biases join the pruning pool
//                           (reg.include separately widens psi)
//   data.kind               two_moons | blobs | shapes
//   data.n                  sample count (two_moons, blobs)
//   data.noise              two_moons noise sigma
//   data.k  data.spread     blobs cluster count / sigma
//   data.grid_w data.grid_h data.n_samples
//                           shapes grid extents / sample count
//   data.eval_n             held-out eval samples (default n/4, min 1)
//   train.eta0 train.momentum train.batch_size train.epochs
//   train.lambda            comma list; one training run per value
//   train.optimizer         sgd | sam         train.rho  SAM radius
//   train.schedule          constant | step_decay | dynamic_tuning | inv_sqrt
//   train.schedule.factor   step_decay multiplier
//   train.schedule.period   step_decay epochs per decay
//   train.schedule.c        inv_sqrt numerator
//   reg.r reg.epsilon       psi constants
//   reg.include             prunable | all
//   prune.rates             comma list of rates in [0, 1)
//   prune.scope             global | groups
//   prune.groups            name:skew:member|member; ... (empty skew field
//                           marks the group as rate-compensating)
//   seeds                   comma list of u64 seeds
//   output_dir              artifact directory
struct DataConfig {
  std::string kind;
  std::size_t n = 0;
  double noise = 0.0;
  std::size_t k = 3;
  double spread = 0.5;
  std::size_t grid_w = 16;
  std::size_t grid_h = 16;
  std::size_t n_samples = 0;
  std::size_t eval_n = 0;
};

struct ExperimentConfig {
  Net layers;
  bool prune_biases = false;
  DataConfig data;
  OptimConfig train;
  std::vector<double> lambdas{0.0};
  RegConfig reg;
  std::string reg_include = "prunable";
  std::vector<double> prune_rates;
  std::string prune_scope = "global";
  std::vector<PruneGroup> prune_groups;
  std::vector<std::uint64_t> seeds{0};
  std::string output_dir = "out";

  PruneSpec prune_spec(double rate) const;
  RegConfig reg_config(double lambda) const;

  // Training set then eval set, drawn in that order from one stream.
  Dataset make_train_data(RngState& rng) const;
  Dataset make_eval_data(RngState& rng) const;
};

ExperimentConfig parse_config_text(std::string_view text, const std::string& source);
ExperimentConfig parse_config_file(const std::filesystem::path& path);

// Throws ConfigError naming the offending key on any invariant violation.
void validate(const ExperimentConfig& cfg);

Net parse_layer_list(std::string_view text);

}  // namespace varprune
