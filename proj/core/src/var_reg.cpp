#include "varprune/var_reg.hpp"

#include <cmath>
#include <vector>

#include "varprune/errors.hpp"

namespace varprune {

namespace {

void check_cfg(double r, double epsilon) {
  if (!(r > 0.0)) throw ConfigError("reg.r must be > 0");
  if (!(epsilon > 0.0)) throw ConfigError("reg.epsilon must be > 0");
}

struct LayerStats {
  std::vector<double> wt;  // smoothed magnitudes
  double mean = 0.0;
  double var = 0.0;
};

LayerStats layer_stats(std::span<const double> weights, double r) {
  LayerStats s;
  s.wt.resize(weights.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    s.wt[i] = std::sqrt(weights[i] * weights[i] + r);
    sum += s.wt[i];
  }
  const double n = static_cast<double>(weights.size());
  s.mean = sum / n;
  double sq = 0.0;
  for (double x : s.wt) {
    const double d = x - s.mean;
    sq += d * d;
  }
  s.var = sq / n;
  return s;
}

}  // namespace

double smoothed_abs(double w, double r) {
  if (!(r > 0.0)) throw ConfigError("smoothed_abs: r must be > 0");
  return std::sqrt(w * w + r);
}

double psi_layer(std::span<const double> weights, double r, double epsilon) {
  check_cfg(r, epsilon);
  if (weights.empty()) throw ConfigError("psi_layer: empty layer");
  const LayerStats s = layer_stats(weights, r);
  return 1.0 / (s.var + epsilon);
}

void psi_layer_grad(std::span<const double> weights, double r, double epsilon,
                    std::span<double> grad_out) {
  check_cfg(r, epsilon);
  if (weights.empty()) throw ConfigError("psi_layer_grad: empty layer");
  if (grad_out.size() != weights.size())
    throw DimensionError("psi_layer_grad: output length mismatch");
  const LayerStats s = layer_stats(weights, r);
  const double n = static_cast<double>(weights.size());
  const double denom = s.var + epsilon;
  const double scale = -2.0 / (n * denom * denom);
  for (std::size_t i = 0; i < weights.size(); ++i)
    grad_out[i] = scale * (s.wt[i] - s.mean) * (weights[i] / s.wt[i]);
}

double psi(const ParamSet& params, const RegConfig& cfg) {
  check_cfg(cfg.r, cfg.epsilon);
  double total = 0.0;
  bool any = false;
  std::vector<double> buf;
  for (const auto& e : params.entries) {
    if (!cfg.includes(e)) continue;
    any = true;
    buf.assign(e.value.data.begin(), e.value.data.end());
    total += psi_layer(buf, cfg.r, cfg.epsilon);
  }
  if (!any) throw ConfigError("psi: regularizer config includes no parameter entry");
  return total;
}

PerEntryValues psi_grad(const ParamSet& params, const RegConfig& cfg) {
  check_cfg(cfg.r, cfg.epsilon);
  PerEntryValues grads(params.entries.size());
  bool any = false;
  std::vector<double> buf;
  for (std::size_t i = 0; i < params.entries.size(); ++i) {
    const auto& e = params.entries[i];
    if (!cfg.includes(e)) continue;
    any = true;
    buf.assign(e.value.data.begin(), e.value.data.end());
    grads[i].resize(buf.size());
    psi_layer_grad(buf, cfg.r, cfg.epsilon, grads[i]);
  }
  if (!any) throw ConfigError("psi_grad: regularizer config includes no parameter entry");
  return grads;
}

}  // namespace varprune
