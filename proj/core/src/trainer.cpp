#include "varprune/trainer.hpp"

#include <algorithm>
#include <cmath>

#include "varprune/errors.hpp"
#include "varprune/diagnostics.hpp"
#include "varprune/metrics.hpp"

namespace varprune {

void validate(const OptimConfig& cfg) {
  if (!(cfg.eta0 > 0.0)) throw ConfigError("train.eta0 must be > 0");
  if (cfg.momentum < 0.0 || cfg.momentum >= 1.0)
    throw ConfigError("train.momentum must lie in [0, 1)");
  if (cfg.lambda < 0.0) throw ConfigError("train.lambda must be >= 0");
  if (cfg.batch_size == 0) throw ConfigError("train.batch_size must be >= 1");
  if (cfg.epochs == 0) throw ConfigError("train.epochs must be >= 1");
  if (cfg.optimizer == OptimizerKind::sam && !(cfg.rho > 0.0))
    throw ConfigError("train.rho must be > 0 when optimizer is sam");
  const Schedule& s = cfg.schedule;
  if (!(s.decay_factor > 0.0) || !(s.drop_factor > 0.0) || !(s.shrink > 0.0) ||
      !(s.grow > 0.0) || !(s.c > 0.0))
    throw ConfigError("train.schedule: all factors must be > 0");
  if (s.period == 0) throw ConfigError("train.schedule.period must be >= 1");
  if (s.cadence == 0) throw ConfigError("train.schedule cadence must be >= 1");
  if (s.short_window == 0 || s.long_window < s.short_window)
    throw ConfigError("train.schedule windows must satisfy 1 <= short <= long");
}

double schedule_lr(const Schedule& s, std::size_t epoch,
                   std::span<const double> loss_history, double eta0,
                   std::size_t total_epochs) {
  switch (s.kind) {
    case ScheduleKind::constant:
      return eta0;
    case ScheduleKind::step_decay:
      return eta0 * std::pow(s.decay_factor,
                             static_cast<double>(epoch / std::max<std::size_t>(1, s.period)));
    case ScheduleKind::inv_sqrt:
      return s.c / std::sqrt(static_cast<double>(std::max<std::size_t>(1, total_epochs)));
    case ScheduleKind::dynamic_tuning:
      break;
  }

  // Base drops first, then the accumulated loss-comparison adjustments.
  double lr = eta0;
  const std::size_t d1 = total_epochs / 3, d2 = (2 * total_epochs) / 3;
  if (d1 > 0 && epoch >= d1) lr /= s.drop_factor;
  if (d2 > 0 && epoch >= d2) lr /= s.drop_factor;

  auto window_mean = [&](std::size_t end, std::size_t len) {
    double sum = 0.0;
    for (std::size_t i = end - len; i < end; ++i) sum += loss_history[i];
    return sum / static_cast<double>(len);
  };
  for (std::size_t a = s.start_epoch; a <= epoch; a += s.cadence) {
    if (a > loss_history.size() || a < s.long_window) continue;  // not enough history yet
    const double short_avg = window_mean(a, s.short_window);
    const double long_avg = window_mean(a, s.long_window);
    lr *= (short_avg > long_avg) ? s.shrink : s.grow;
  }
  return lr;
}

SgdState SgdState::zeros_like(const ParamSet& params) {
  SgdState st;
  st.velocity.resize(params.entries.size());
  for (std::size_t i = 0; i < params.entries.size(); ++i)
    st.velocity[i].assign(params.entries[i].value.size(), 0.0);
  return st;
}

void sgd_var_step(ParamSet& params, const PerEntryValues& psi_grads,
                  const StepConfig& cfg, SgdState& state, std::size_t step_index) {
  const bool with_reg = cfg.lambda != 0.0 && !psi_grads.empty();
  for (std::size_t i = 0; i < params.entries.size(); ++i) {
    auto& e = params.entries[i];
    auto& vel = state.velocity[i];
    const bool entry_reg = with_reg && !psi_grads[i].empty();
    for (std::size_t j = 0; j < e.value.size(); ++j) {
      double g = static_cast<double>(e.grad.data[j]);
      if (entry_reg) g += cfg.lambda * psi_grads[i][j];
      if (!std::isfinite(g))
        throw NumericError("non-finite gradient at step " + std::to_string(step_index) +
                           ", entry " + e.name + "[" + std::to_string(j) + "]");
      double v = g;
      if (cfg.momentum != 0.0) {
        v = cfg.momentum * vel[j] + g;
        vel[j] = v;
      }
      e.value.data[j] = static_cast<float>(static_cast<double>(e.value.data[j]) - cfg.lr * v);
    }
  }
}

SamStepOutcome sam_var_step(ParamSet& params, const LossGradFn& loss_grad,
                            const PsiGradFn& psi_grad_fn, const StepConfig& cfg,
                            SgdState& state, std::size_t step_index) {
  SamStepOutcome out;
  out.loss = loss_grad(params);

  double norm_sq = 0.0;
  for (const auto& e : params.entries)
    for (float g : e.grad.data) norm_sq += static_cast<double>(g) * static_cast<double>(g);
  const double norm = std::sqrt(norm_sq);

  if (norm == 0.0) {
    out.zero_grad_fallback = true;
    const PerEntryValues psi_g =
        cfg.lambda != 0.0 ? psi_grad_fn(params) : PerEntryValues{};
    sgd_var_step(params, psi_g, cfg, state, step_index);
    return out;
  }

  // Ascend to w + rho * g/|g|, saving the exact float bits for the restore.
  std::vector<std::vector<float>> saved(params.entries.size());
  const double scale = cfg.rho / norm;
  for (std::size_t i = 0; i < params.entries.size(); ++i) {
    auto& e = params.entries[i];
    saved[i] = e.value.data;
    for (std::size_t j = 0; j < e.value.size(); ++j)
      e.value.data[j] = static_cast<float>(static_cast<double>(e.value.data[j]) +
                                           scale * static_cast<double>(e.grad.data[j]));
  }

  loss_grad(params);  // gradients at the perturbed point
  const PerEntryValues psi_g =
      cfg.lambda != 0.0 ? psi_grad_fn(params) : PerEntryValues{};

  for (std::size_t i = 0; i < params.entries.size(); ++i)
    params.entries[i].value.data = std::move(saved[i]);

  sgd_var_step(params, psi_g, cfg, state, step_index);
  return out;
}

double evaluate_metric(const Net& net, const ParamSet& params, const Dataset& data) {
  const Tensor scores = forward(net, params, data.inputs);
  if (!data.labels.empty())
    return accuracy(predict_labels(scores), data.labels);
  // Segmentation: mean per-sample F1 at threshold 0.5.
  const std::size_t n = scores.rows(), pixels = scores.cols();
  double sum = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    BinaryMask pred{pixels, 1, std::vector<std::uint8_t>(pixels, 0)};
    BinaryMask gt{pixels, 1, std::vector<std::uint8_t>(pixels, 0)};
    for (std::size_t c = 0; c < pixels; ++c) {
      pred.values[c] = scores.data[r * pixels + c] > 0.0f ? 1 : 0;  // sigmoid(s) > 0.5
      gt.values[c] = data.mask_targets.data[r * pixels + c] > 0.5f ? 1 : 0;
    }
    sum += f1_binary(pred, gt);
  }
  return sum / static_cast<double>(n);
}

TrainResult train(const Net& net, const Dataset& data, const OptimConfig& cfg,
                  const RegConfig& reg, const Dataset* eval_data) {
  validate(cfg);
  validate_net(net);
  if (data.size() == 0) throw ConfigError("train: empty dataset");

  RngState rng(cfg.seed);
  TrainResult result;
  result.params = init_params(net, rng);
  ParamSet& params = result.params;
  SgdState state = SgdState::zeros_like(params);

  RegConfig reg_cfg = reg;
  reg_cfg.lambda = cfg.lambda;
  const LossKind kind = data.loss_kind();
  const std::size_t n = data.size();

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  std::vector<double> loss_history;
  loss_history.reserve(cfg.epochs);
  std::size_t step = 0;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = schedule_lr(cfg.schedule, epoch, loss_history, cfg.eta0, cfg.epochs);
    rng.shuffle(order);

    double epoch_loss_sum = 0.0;
    try {
      for (std::size_t start = 0; start < n; start += cfg.batch_size) {
        const std::size_t len = std::min(cfg.batch_size, n - start);
        const Batch batch = data.slice({order.data() + start, len});
        const StepConfig step_cfg{lr, cfg.lambda, cfg.momentum, cfg.rho};

        double batch_loss = 0.0;
        if (cfg.optimizer == OptimizerKind::sam) {
          const auto outcome = sam_var_step(
              params,
              [&](ParamSet& p) { return loss_and_grad(net, p, batch, kind); },
              [&](const ParamSet& p) { return psi_grad(p, reg_cfg); },
              step_cfg, state, step);
          batch_loss = outcome.loss;
          if (outcome.zero_grad_fallback) ++result.record.sam_zero_grad_fallbacks;
        } else {
          batch_loss = loss_and_grad(net, params, batch, kind);
          const PerEntryValues psi_g =
              cfg.lambda != 0.0 ? psi_grad(params, reg_cfg) : PerEntryValues{};
          sgd_var_step(params, psi_g, step_cfg, state, step);
        }
        epoch_loss_sum += batch_loss * static_cast<double>(len);
        ++step;
      }
    } catch (const NumericError& err) {
      result.record.diverged = true;
      result.record.failed_step = step;
      result.record.failure = err.what();
      return result;
    }

    EpochRow row;
    row.epoch = epoch;
    row.train_loss = epoch_loss_sum / static_cast<double>(n);
    row.psi_value = psi(params, reg_cfg);
    row.lr = lr;
    row.model_variance = model_variance(params);
    row.eval_metric = evaluate_metric(net, params, eval_data != nullptr ? *eval_data : data);
    result.record.rows.push_back(row);
    loss_history.push_back(row.train_loss);
  }
  return result;
}

}  // namespace varprune
