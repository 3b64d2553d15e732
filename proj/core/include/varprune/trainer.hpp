#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "varprune/model.hpp"
#include "varprune/var_reg.hpp"

namespace varprune {

enum class ScheduleKind { constant, step_decay, dynamic_tuning, inv_sqrt };

// Learning-rate schedules. dynamic_tuning drops the base rate by
// `drop_factor` at floor(T/3) and floor(2T/3); from `start_epoch` on, every
// `cadence` epochs it additionally multiplies the rate by `shrink` when the
// short-window loss average exceeds the long-window average, by `grow`
// otherwise. Adjustments accumulate across the run and are not capped.
struct Schedule {
  ScheduleKind kind = ScheduleKind::constant;

  // step_decay
  double decay_factor = 0.5;
  std::size_t period = 50;

  // dynamic_tuning
  double drop_factor = 10.0;
  std::size_t short_window = 5;
  std::size_t long_window = 10;
  double shrink = 0.7;
  double grow = 1.06;
  std::size_t start_epoch = 20;
  std::size_t cadence = 5;

  // inv_sqrt: lr = c / sqrt(total_epochs), constant across the run
  double c = 0.1;
};

enum class OptimizerKind { sgd, sam };

struct OptimConfig {
  double eta0 = 0.1;
  double momentum = 0.0;   // in [0, 1)
  double lambda = 0.0;
  std::size_t batch_size = 32;
  std::size_t epochs = 1;
  OptimizerKind optimizer = OptimizerKind::sgd;
  double rho = 0.05;       // SAM perturbation radius
  Schedule schedule;
  std::uint64_t seed = 0;
};

void validate(const OptimConfig& cfg);

struct EpochRow {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double psi_value = 0.0;
  double lr = 0.0;
  double model_variance = 0.0;
  double eval_metric = 0.0;
};

// Per-epoch time series for one run. `rows` has one row per completed epoch;
// a diverged run keeps the rows finished before the failing step.
struct RunRecord {
  std::vector<EpochRow> rows;
  bool diverged = false;
  std::size_t failed_step = 0;
  std::string failure;
  std::size_t sam_zero_grad_fallbacks = 0;
};

struct TrainResult {
  ParamSet params;
  RunRecord record;
};

// Learning rate for `epoch` (0-based) given the losses of all completed
// epochs. Pure function of its arguments.
double schedule_lr(const Schedule& schedule, std::size_t epoch,
                   std::span<const double> loss_history, double eta0,
                   std::size_t total_epochs);

struct StepConfig {
  double lr = 0.0;
  double lambda = 0.0;
  double momentum = 0.0;
  double rho = 0.0;
};

// Momentum buffer, one double per weight, laid out like the ParamSet.
struct SgdState {
  PerEntryValues velocity;
  static SgdState zeros_like(const ParamSet& params);
};

// w <- w - lr * v with v <- momentum * v + (grad_L + lambda * grad_psi).
// `params.grad` must hold the minibatch loss gradient; `psi_grads` may be
// empty when lambda == 0 (the regularizer term is skipped entirely, so a
// lambda == 0 run is bit-identical to plain SGD). Combination runs in
// double. Throws NumericError naming `step_index` on a non-finite gradient.
void sgd_var_step(ParamSet& params, const PerEntryValues& psi_grads,
                  const StepConfig& cfg, SgdState& state, std::size_t step_index);

using LossGradFn = std::function<double(ParamSet&)>;
using PsiGradFn = std::function<PerEntryValues(const ParamSet&)>;

struct SamStepOutcome {
  double loss = 0.0;
  bool zero_grad_fallback = false;
};

// SAM update: perturb w by rho * g/|g| with g the minibatch loss gradient,
// re-evaluate both the loss gradient and the regularizer gradient at the
// perturbed point, restore w exactly, then descend on the combined gradient.
// A zero loss gradient falls back to the plain step.
SamStepOutcome sam_var_step(ParamSet& params, const LossGradFn& loss_grad,
                            const PsiGradFn& psi_grad_fn, const StepConfig& cfg,
                            SgdState& state, std::size_t step_index);

// Full seeded run: init, per-epoch shuffle, minibatch steps (last short
// batch kept), per-epoch logging. Deterministic given cfg.seed. On numeric
// divergence training stops and the partial record is preserved.
TrainResult train(const Net& net, const Dataset& data, const OptimConfig& cfg,
                  const RegConfig& reg, const Dataset* eval_data = nullptr);

// Metric used for the eval_metric column: classification accuracy, or mean
// per-sample F1 at threshold 0.5 for segmentation data.
double evaluate_metric(const Net& net, const ParamSet& params, const Dataset& data);

}  // namespace varprune
