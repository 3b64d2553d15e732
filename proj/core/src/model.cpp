#include "varprune/model.hpp"

#include <cmath>
#include <string>

#include "varprune/errors.hpp"

namespace varprune {

LayerSpec LayerSpec::dense(std::size_t in, std::size_t out) {
  LayerSpec s;
  s.kind = Kind::dense;
  s.in_dim = in;
  s.out_dim = out;
  return s;
}

LayerSpec LayerSpec::act(Activation a) {
  LayerSpec s;
  s.kind = Kind::activation;
  s.activation = a;
  return s;
}

void validate_net(const Net& net) {
  if (net.empty()) throw DimensionError("net has no layers");
  std::size_t width = 0;  // 0 = not yet pinned by a dense layer
  for (std::size_t i = 0; i < net.size(); ++i) {
    const auto& l = net[i];
    if (l.kind != LayerSpec::Kind::dense) continue;
    if (l.in_dim == 0 || l.out_dim == 0)
      throw DimensionError("dense layer " + std::to_string(i) + " has zero extent");
    if (width != 0 && l.in_dim != width)
      throw DimensionError("dense layer " + std::to_string(i) + " expects in_dim " +
                           std::to_string(width) + ", got " + std::to_string(l.in_dim));
    width = l.out_dim;
  }
}

std::size_t net_input_dim(const Net& net) {
  for (const auto& l : net)
    if (l.kind == LayerSpec::Kind::dense) return l.in_dim;
  throw DimensionError("net has no dense layer");
}

std::size_t net_output_dim(const Net& net) {
  std::size_t out = 0;
  for (const auto& l : net)
    if (l.kind == LayerSpec::Kind::dense) out = l.out_dim;
  if (out == 0) throw DimensionError("net has no dense layer");
  return out;
}

ParamSet init_params(const Net& net, RngState& rng) {
  validate_net(net);
  ParamSet params;
  std::size_t k = 0;
  for (const auto& l : net) {
    if (l.kind != LayerSpec::Kind::dense) continue;
    const std::string base = "dense" + std::to_string(k);
    const double std_dev = std::sqrt(2.0 / static_cast<double>(l.in_dim));
    Tensor w({l.in_dim, l.out_dim}, rng.draw_normal(l.in_dim * l.out_dim, 0.0, std_dev));
    params.add(base + ".weight", std::move(w), /*prunable=*/true);
    params.add(base + ".bias", Tensor({l.out_dim}), /*prunable=*/false);
    ++k;
  }
  return params;
}

Batch Dataset::slice(std::span<const std::size_t> indices) const {
  const std::size_t features = inputs.cols();
  Batch b;
  b.inputs = Tensor({indices.size(), features});
  for (std::size_t r = 0; r < indices.size(); ++r)
    for (std::size_t c = 0; c < features; ++c)
      b.inputs.data[r * features + c] = inputs.data[indices[r] * features + c];
  if (!labels.empty()) {
    b.labels.resize(indices.size());
    for (std::size_t r = 0; r < indices.size(); ++r) b.labels[r] = labels[indices[r]];
  }
  if (!mask_targets.data.empty()) {
    const std::size_t pixels = mask_targets.cols();
    b.mask_targets = Tensor({indices.size(), pixels});
    for (std::size_t r = 0; r < indices.size(); ++r)
      for (std::size_t c = 0; c < pixels; ++c)
        b.mask_targets.data[r * pixels + c] = mask_targets.data[indices[r] * pixels + c];
  }
  return b;
}

Batch Dataset::full_batch() const {
  std::vector<std::size_t> idx(size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return slice(idx);
}

namespace {

float apply_activation(Activation a, float x) {
  switch (a) {
    case Activation::relu: return x > 0.0f ? x : 0.0f;
    case Activation::tanh_fn: return std::tanh(x);
    case Activation::sigmoid: return 1.0f / (1.0f + std::exp(-x));
    case Activation::identity: return x;
  }
  return x;
}

// Derivative of the activation, written in terms of input x and output y.
double activation_deriv(Activation a, double x, double y) {
  switch (a) {
    case Activation::relu: return x > 0.0 ? 1.0 : 0.0;
    case Activation::tanh_fn: return 1.0 - y * y;
    case Activation::sigmoid: return y * (1.0 - y);
    case Activation::identity: return 1.0;
  }
  return 1.0;
}

struct DenseRefs {
  const ParamEntry* weight;
  const ParamEntry* bias;
};

std::vector<DenseRefs> dense_refs(const Net& net, const ParamSet& params) {
  std::vector<DenseRefs> refs;
  std::size_t k = 0;
  for (const auto& l : net) {
    if (l.kind != LayerSpec::Kind::dense) continue;
    const std::string base = "dense" + std::to_string(k);
    const auto* w = params.find(base + ".weight");
    const auto* b = params.find(base + ".bias");
    if (w == nullptr || b == nullptr)
      throw ConfigError("missing parameters for layer " + base);
    if (w->value.shape != std::vector<std::size_t>{l.in_dim, l.out_dim})
      throw DimensionError(base + ".weight shape " + shape_to_string(w->value.shape) +
                           " does not match layer spec");
    refs.push_back({w, b});
    ++k;
  }
  return refs;
}

// Forward pass keeping every layer output; outs[0] is the input.
std::vector<Tensor> forward_cached(const Net& net, const ParamSet& params, const Tensor& x) {
  validate_net(net);
  if (x.rank() != 2) throw DimensionError("forward: input must be [batch, features]");
  if (x.cols() != net_input_dim(net))
    throw DimensionError("forward: input feature dim " + std::to_string(x.cols()) +
                         " does not match first dense layer " +
                         std::to_string(net_input_dim(net)));
  const auto refs = dense_refs(net, params);

  std::vector<Tensor> outs;
  outs.reserve(net.size() + 1);
  outs.push_back(x);
  std::size_t k = 0;
  for (const auto& l : net) {
    const Tensor& in = outs.back();
    if (l.kind == LayerSpec::Kind::dense) {
      const auto& w = refs[k].weight->value;
      const auto& b = refs[k].bias->value;
      Tensor out = matmul(in, w);
      for (std::size_t r = 0; r < out.rows(); ++r)
        for (std::size_t c = 0; c < out.cols(); ++c)
          out.data[r * out.cols() + c] += b.data[c];
      outs.push_back(std::move(out));
      ++k;
    } else {
      Tensor out = in;
      for (auto& v : out.data) v = apply_activation(l.activation, v);
      outs.push_back(std::move(out));
    }
  }
  ensure_all_finite(outs.back(), "forward");
  return outs;
}

// Loss and d(loss)/d(scores) for a [batch, out] score matrix, both in double.
double loss_and_output_grad(const Tensor& scores, const Batch& batch, LossKind kind,
                            std::vector<double>* grad_out) {
  const std::size_t n = scores.rows(), c = scores.cols();
  if (grad_out != nullptr) grad_out->assign(n * c, 0.0);
  double total = 0.0;
  if (kind == LossKind::softmax_ce) {
    if (batch.labels.size() != n)
      throw DimensionError("softmax_ce: label count does not match batch");
    for (std::size_t r = 0; r < n; ++r) {
      const int y = batch.labels[r];
      if (y < 0 || static_cast<std::size_t>(y) >= c)
        throw ConfigError("softmax_ce: class index " + std::to_string(y) +
                          " out of range for " + std::to_string(c) + " classes");
      double mx = scores.data[r * c];
      for (std::size_t j = 1; j < c; ++j)
        mx = std::max(mx, static_cast<double>(scores.data[r * c + j]));
      double sum = 0.0;
      for (std::size_t j = 0; j < c; ++j)
        sum += std::exp(static_cast<double>(scores.data[r * c + j]) - mx);
      const double log_sum = std::log(sum);
      total += log_sum - (static_cast<double>(scores.data[r * c + y]) - mx);
      if (grad_out != nullptr) {
        for (std::size_t j = 0; j < c; ++j) {
          const double p =
              std::exp(static_cast<double>(scores.data[r * c + j]) - mx) / sum;
          (*grad_out)[r * c + j] =
              (p - (static_cast<std::size_t>(y) == j ? 1.0 : 0.0)) / static_cast<double>(n);
        }
      }
    }
    const double loss = total / static_cast<double>(n);
    if (!std::isfinite(loss)) throw NumericError("softmax_ce: non-finite loss");
    return loss;
  }

  // Binary cross-entropy over sigmoid scores, averaged over batch x pixels.
  if (batch.mask_targets.data.size() != n * c)
    throw DimensionError("bce: mask target shape does not match scores");
  const double m = static_cast<double>(n * c);
  for (std::size_t i = 0; i < n * c; ++i) {
    const double s = scores.data[i];
    const double y = batch.mask_targets.data[i];
    // max(s,0) - s*y + log(1 + exp(-|s|)) is the stable BCE-with-logits form.
    total += std::max(s, 0.0) - s * y + std::log1p(std::exp(-std::abs(s)));
    if (grad_out != nullptr) {
      const double p = 1.0 / (1.0 + std::exp(-s));
      (*grad_out)[i] = (p - y) / m;
    }
  }
  const double loss = total / m;
  if (!std::isfinite(loss)) throw NumericError("bce: non-finite loss");
  return loss;
}

void check_targets(const Batch& batch, LossKind kind) {
  if (batch.size() == 0) throw ConfigError("empty batch");
  if (kind == LossKind::softmax_ce && batch.labels.empty())
    throw ConfigError("softmax_ce needs class labels");
  if (kind == LossKind::bce && batch.mask_targets.data.empty())
    throw ConfigError("bce needs mask targets");
}

}  // namespace

Tensor forward(const Net& net, const ParamSet& params, const Tensor& x) {
  auto outs = forward_cached(net, params, x);
  return std::move(outs.back());
}

double loss_value(const Net& net, const ParamSet& params, const Batch& batch, LossKind kind) {
  check_targets(batch, kind);
  const Tensor scores = forward(net, params, batch.inputs);
  return loss_and_output_grad(scores, batch, kind, nullptr);
}

double loss_and_grad(const Net& net, ParamSet& params, const Batch& batch, LossKind kind) {
  check_targets(batch, kind);
  const auto outs = forward_cached(net, params, batch.inputs);
  const auto refs = dense_refs(net, params);

  std::vector<double> g;  // gradient w.r.t. the current layer's output
  const double loss = loss_and_output_grad(outs.back(), batch, kind, &g);

  params.zero_grads();
  const std::size_t batch_n = batch.size();
  std::size_t dense_idx = refs.size();
  for (std::size_t li = net.size(); li-- > 0;) {
    const auto& l = net[li];
    const Tensor& in = outs[li];
    const Tensor& out = outs[li + 1];
    if (l.kind == LayerSpec::Kind::activation) {
      const std::size_t width = in.cols();
      for (std::size_t i = 0; i < batch_n * width; ++i)
        g[i] *= activation_deriv(l.activation, in.data[i], out.data[i]);
      continue;
    }
    --dense_idx;
    auto* w_entry = params.find(refs[dense_idx].weight->name);
    auto* b_entry = params.find(refs[dense_idx].bias->name);
    const std::size_t in_d = l.in_dim, out_d = l.out_dim;

    for (std::size_t t = 0; t < in_d; ++t) {
      for (std::size_t j = 0; j < out_d; ++j) {
        double acc = 0.0;
        for (std::size_t r = 0; r < batch_n; ++r)
          acc += static_cast<double>(in.data[r * in_d + t]) * g[r * out_d + j];
        w_entry->grad.data[t * out_d + j] = static_cast<float>(acc);
      }
    }
    for (std::size_t j = 0; j < out_d; ++j) {
      double acc = 0.0;
      for (std::size_t r = 0; r < batch_n; ++r) acc += g[r * out_d + j];
      b_entry->grad.data[j] = static_cast<float>(acc);
    }

    std::vector<double> g_prev(batch_n * in_d, 0.0);
    const auto& w = w_entry->value;
    for (std::size_t r = 0; r < batch_n; ++r) {
      for (std::size_t t = 0; t < in_d; ++t) {
        double acc = 0.0;
        for (std::size_t j = 0; j < out_d; ++j)
          acc += g[r * out_d + j] * static_cast<double>(w.data[t * out_d + j]);
        g_prev[r * in_d + t] = acc;
      }
    }
    g = std::move(g_prev);
  }
  return loss;
}

namespace {

// All-double loss evaluation used by the finite-difference oracle. Kept
// deliberately separate from the float32 forward pass above.
double loss_f64(const Net& net, const std::vector<std::vector<double>>& values,
                const ParamSet& params, const Batch& batch, LossKind kind) {
  const std::size_t batch_n = batch.size();
  std::vector<double> cur(batch.inputs.data.begin(), batch.inputs.data.end());
  std::size_t width = batch.inputs.cols();

  std::size_t k = 0;
  for (const auto& l : net) {
    if (l.kind == LayerSpec::Kind::activation) {
      for (auto& v : cur) {
        switch (l.activation) {
          case Activation::relu: v = v > 0.0 ? v : 0.0; break;
          case Activation::tanh_fn: v = std::tanh(v); break;
          case Activation::sigmoid: v = 1.0 / (1.0 + std::exp(-v)); break;
          case Activation::identity: break;
        }
      }
      continue;
    }
    // Locate this dense layer's weight/bias positions in the entry list.
    const std::string base = "dense" + std::to_string(k);
    std::size_t wi = params.entries.size(), bi = params.entries.size();
    for (std::size_t i = 0; i < params.entries.size(); ++i) {
      if (params.entries[i].name == base + ".weight") wi = i;
      if (params.entries[i].name == base + ".bias") bi = i;
    }
    const auto& wv = values[wi];
    const auto& bv = values[bi];
    std::vector<double> next(batch_n * l.out_dim, 0.0);
    for (std::size_t r = 0; r < batch_n; ++r)
      for (std::size_t j = 0; j < l.out_dim; ++j) {
        double acc = bv[j];
        for (std::size_t t = 0; t < l.in_dim; ++t)
          acc += cur[r * width + t] * wv[t * l.out_dim + j];
        next[r * l.out_dim + j] = acc;
      }
    cur = std::move(next);
    width = l.out_dim;
    ++k;
  }

  double total = 0.0;
  if (kind == LossKind::softmax_ce) {
    for (std::size_t r = 0; r < batch_n; ++r) {
      const int y = batch.labels[r];
      double mx = cur[r * width];
      for (std::size_t j = 1; j < width; ++j) mx = std::max(mx, cur[r * width + j]);
      double sum = 0.0;
      for (std::size_t j = 0; j < width; ++j) sum += std::exp(cur[r * width + j] - mx);
      total += std::log(sum) - (cur[r * width + static_cast<std::size_t>(y)] - mx);
    }
    return total / static_cast<double>(batch_n);
  }
  const double m = static_cast<double>(batch_n * width);
  for (std::size_t i = 0; i < batch_n * width; ++i) {
    const double s = cur[i];
    const double y = batch.mask_targets.data[i];
    total += std::max(s, 0.0) - s * y + std::log1p(std::exp(-std::abs(s)));
  }
  return total / m;
}

}  // namespace

PerEntryValues finite_diff_grad(const Net& net, const ParamSet& params,
                                const Batch& batch, LossKind kind, double h) {
  if (!(h > 0.0)) throw ConfigError("finite_diff_grad: h must be > 0");
  check_targets(batch, kind);
  validate_net(net);

  std::vector<std::vector<double>> values(params.entries.size());
  for (std::size_t i = 0; i < params.entries.size(); ++i)
    values[i].assign(params.entries[i].value.data.begin(),
                     params.entries[i].value.data.end());

  PerEntryValues grads(params.entries.size());
  for (std::size_t i = 0; i < params.entries.size(); ++i) {
    grads[i].resize(values[i].size());
    for (std::size_t j = 0; j < values[i].size(); ++j) {
      const double saved = values[i][j];
      values[i][j] = saved + h;
      const double lp = loss_f64(net, values, params, batch, kind);
      values[i][j] = saved - h;
      const double lm = loss_f64(net, values, params, batch, kind);
      values[i][j] = saved;
      grads[i][j] = (lp - lm) / (2.0 * h);
    }
  }
  return grads;
}

}  // namespace varprune
