#include "varprune/param_set.hpp"

#include <algorithm>

#include "varprune/errors.hpp"

namespace varprune {

ParamEntry& ParamSet::add(std::string name, Tensor value, bool prunable) {
  if (find(name) != nullptr)
    throw ConfigError("duplicate parameter name: " + name);
  ParamEntry e;
  e.name = std::move(name);
  e.grad = Tensor(value.shape);
  e.value = std::move(value);
  e.prunable = prunable;
  entries.push_back(std::move(e));
  return entries.back();
}

ParamEntry* ParamSet::find(std::string_view name) {
  for (auto& e : entries)
    if (e.name == name) return &e;
  return nullptr;
}

const ParamEntry* ParamSet::find(std::string_view name) const {
  for (const auto& e : entries)
    if (e.name == name) return &e;
  return nullptr;
}

void ParamSet::zero_grads() {
  for (auto& e : entries) std::fill(e.grad.data.begin(), e.grad.data.end(), 0.0f);
}

std::size_t ParamSet::total_values() const {
  std::size_t n = 0;
  for (const auto& e : entries) n += e.value.size();
  return n;
}

std::size_t ParamSet::prunable_values() const {
  std::size_t n = 0;
  for (const auto& e : entries)
    if (e.prunable) n += e.value.size();
  return n;
}

}  // namespace varprune
