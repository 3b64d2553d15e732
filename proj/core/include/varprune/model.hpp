#pragma once

#include <span>
#include <vector>

#include "varprune/param_set.hpp"
#include "varprune/rng.hpp"
#include "varprune/tensor.hpp"

namespace varprune {
class RngState;

enum class Activation { relu, tanh_fn, sigmoid, identity };

// A feed-forward net is a flat stack of dense and elementwise-activation
// layers. Dense widths must chain: each dense layer's in_dim equals the
// width produced by the previous dense layer.
struct LayerSpec {
  enum class Kind { dense, activation };

  Kind kind = Kind::dense;
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  Activation activation = Activation::identity;

  static LayerSpec dense(std::size_t in, std::size_t out);
  static LayerSpec act(Activation a);
};

using Net = std::vector<LayerSpec>;

// Throws DimensionError when dense widths do not chain.
void validate_net(const Net& net);

std::size_t net_input_dim(const Net& net);
std::size_t net_output_dim(const Net& net);

// Parameters for each dense layer k: "dense<k>.weight" [in,out] (prunable)
// drawn normal(0, sqrt(2/in)) row by row, and "dense<k>.bias" [out]
// (non-prunable) zeroed. Draw order is part of the seeded-run contract.
ParamSet init_params(const Net& net, RngState& rng);

// One minibatch. Exactly one target field is populated: `labels` for
// classification (class index per row) or `mask_targets` for per-pixel
// binary segmentation ([batch, pixels], values 0/1).
struct Batch {
  Tensor inputs;  // [batch, features]
  std::vector<int> labels;
  Tensor mask_targets;

  std::size_t size() const { return inputs.shape.empty() ? 0 : inputs.shape[0]; }
};

enum class LossKind { softmax_ce, bce };

// A full dataset; batches are sliced out of it by index. Segmentation
// datasets carry the grid extents their flattened pixel rows came from.
struct Dataset {
  Tensor inputs;  // [n, features]
  std::vector<int> labels;
  Tensor mask_targets;
  std::size_t grid_w = 0;
  std::size_t grid_h = 0;

  LossKind loss_kind() const { return labels.empty() ? LossKind::bce : LossKind::softmax_ce; }
  std::size_t size() const { return inputs.shape.empty() ? 0 : inputs.shape[0]; }
  Batch slice(std::span<const std::size_t> indices) const;
  Batch full_batch() const;
};

// Deterministic forward pass; returns logits (classification) or per-pixel
// scores (segmentation), shape [batch, out_dim].
Tensor forward(const Net& net, const ParamSet& params, const Tensor& x);

// Mean loss over the batch plus exact analytic gradients of that mean,
// written (not accumulated) into the ParamSet grad buffers. Dot products and
// loss sums accumulate in double; activations are stored as float32.
double loss_and_grad(const Net& net, ParamSet& params, const Batch& batch, LossKind kind);

// Loss only (no gradient work); same value as loss_and_grad.
double loss_value(const Net& net, const ParamSet& params, const Batch& batch, LossKind kind);

// Central-difference gradient oracle, (L(w+h e_i) - L(w-h e_i)) / 2h per
// coordinate. Evaluates the loss through a separate all-double path so it
// stays independent of the float32 forward/backward implementation.
PerEntryValues finite_diff_grad(const Net& net, const ParamSet& params,
                                const Batch& batch, LossKind kind, double h);

}  // namespace varprune
