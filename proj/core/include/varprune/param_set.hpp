#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "varprune/tensor.hpp"

namespace varprune {

// One named parameter tensor with its gradient buffer. `prunable` marks the
// weights that take part in pruning and in the variance penalty: dense weight
// matrices by default, never biases unless a config overrides it.
struct ParamEntry {
  std::string name;
  Tensor value;
  Tensor grad;
  bool prunable = false;
};

// Ordered collection of parameters; the flattened concatenation of `value`
// buffers is the parameter vector the optimizer walks. Single writer during a
// training step; distinct ParamSets may be used from different threads.
struct ParamSet {
  std::vector<ParamEntry> entries;

  ParamEntry& add(std::string name, Tensor value, bool prunable);
  ParamEntry* find(std::string_view name);
  const ParamEntry* find(std::string_view name) const;

  void zero_grads();
  std::size_t total_values() const;
  std::size_t prunable_values() const;
};

// Gradient (or any per-weight field) laid out parallel to `entries`;
// entries that do not participate carry an empty vector.
using PerEntryValues = std::vector<std::vector<double>>;

}  // namespace varprune
