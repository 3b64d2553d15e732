#include "varprune/pruner.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "varprune/errors.hpp"

namespace varprune {

std::size_t Mask::zeros() const {
  std::size_t n = 0;
  for (const auto& e : entries)
    for (auto v : e.keep) n += (v == 0);
  return n;
}

MaskEntry* Mask::find(std::string_view name) {
  for (auto& e : entries)
    if (e.name == name) return &e;
  return nullptr;
}

const MaskEntry* Mask::find(std::string_view name) const {
  for (const auto& e : entries)
    if (e.name == name) return &e;
  return nullptr;
}

namespace {

struct WeightRef {
  float magnitude;
  std::uint32_t entry;
  std::uint32_t flat;
};

// Ascending (|w|, entry order, flat index); the first k entries under this
// order are the ones dropped.
bool weight_order(const WeightRef& a, const WeightRef& b) {
  if (a.magnitude != b.magnitude) return a.magnitude < b.magnitude;
  if (a.entry != b.entry) return a.entry < b.entry;
  return a.flat < b.flat;
}

void check_rate(double rate) {
  if (!(rate >= 0.0) || rate >= 1.0)
    throw ConfigError("prune rate must lie in [0, 1), got " + std::to_string(rate));
}

Mask all_ones_mask(const ParamSet& params) {
  Mask mask;
  for (const auto& e : params.entries) {
    if (!e.prunable) continue;
    mask.entries.push_back({e.name, e.value.shape,
                            std::vector<std::uint8_t>(e.value.size(), 1)});
  }
  return mask;
}

// Drop the `count` smallest-magnitude weights among the listed entries,
// writing zeros into the matching mask entries.
void drop_smallest(const ParamSet& params, const std::vector<std::uint32_t>& entry_ids,
                   std::size_t count, Mask& mask) {
  if (count == 0) return;
  std::vector<WeightRef> refs;
  std::size_t total = 0;
  for (auto id : entry_ids) total += params.entries[id].value.size();
  refs.reserve(total);
  for (auto id : entry_ids) {
    const auto& values = params.entries[id].value.data;
    for (std::uint32_t j = 0; j < values.size(); ++j)
      refs.push_back({std::fabs(values[j]), id, j});
  }
  std::sort(refs.begin(), refs.end(), weight_order);
  for (std::size_t i = 0; i < count; ++i) {
    const auto& r = refs[i];
    mask.find(params.entries[r.entry].name)->keep[r.flat] = 0;
  }
}

}  // namespace

Mask magnitude_mask_global(const ParamSet& params, double rate) {
  check_rate(rate);
  const std::size_t n = params.prunable_values();
  if (n == 0) throw ConfigError("magnitude_mask_global: no prunable entries");
  Mask mask = all_ones_mask(params);
  std::vector<std::uint32_t> ids;
  for (std::uint32_t i = 0; i < params.entries.size(); ++i)
    if (params.entries[i].prunable) ids.push_back(i);
  const auto count = static_cast<std::size_t>(std::floor(rate * static_cast<double>(n)));
  drop_smallest(params, ids, count, mask);
  return mask;
}

ResolvedGroups resolve_group_rates(const ParamSet& params,
                                   const std::vector<PruneGroup>& groups, double rate) {
  check_rate(rate);
  if (groups.empty()) throw ConfigError("prune.groups: at least one group required");

  ResolvedGroups out;
  std::unordered_set<std::string> seen;
  for (const auto& g : groups) {
    ResolvedGroup rg;
    rg.name = g.name;
    rg.members = g.members;
    if (g.members.empty())
      throw ConfigError("prune.groups: group '" + g.name + "' has no members");
    for (const auto& m : g.members) {
      const auto* e = params.find(m);
      if (e == nullptr)
        throw ConfigError("prune.groups: unknown entry '" + m + "' in group '" + g.name + "'");
      if (!e->prunable)
        throw ConfigError("prune.groups: entry '" + m + "' is not prunable");
      if (!seen.insert(m).second)
        throw ConfigError("prune.groups: entry '" + m + "' appears in more than one group");
      rg.weight_count += e->value.size();
    }
    out.groups.push_back(std::move(rg));
    out.total_weights += out.groups.back().weight_count;
  }

  // Pinned groups take p + skew; the rest share what keeps the total at p.
  double pinned_weighted = 0.0;
  std::size_t pinned_weights = 0;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (!groups[i].skew.has_value()) continue;
    out.groups[i].rate = rate + *groups[i].skew;
    pinned_weighted += out.groups[i].rate * static_cast<double>(out.groups[i].weight_count);
    pinned_weights += out.groups[i].weight_count;
  }
  const std::size_t open_weights = out.total_weights - pinned_weights;
  if (open_weights > 0) {
    const double open_rate =
        (rate * static_cast<double>(out.total_weights) - pinned_weighted) /
        static_cast<double>(open_weights);
    for (std::size_t i = 0; i < groups.size(); ++i)
      if (!groups[i].skew.has_value()) out.groups[i].rate = open_rate;
  }
  for (const auto& g : out.groups) {
    if (!(g.rate >= 0.0) || g.rate >= 1.0)
      throw ConfigError("prune.groups: resolved rate " + std::to_string(g.rate) +
                        " for group '" + g.name + "' leaves [0, 1)");
  }

  const auto target = static_cast<std::size_t>(
      std::floor(rate * static_cast<double>(out.total_weights)));
  std::size_t dropped = 0;
  for (auto& g : out.groups) {
    g.prune_count = static_cast<std::size_t>(
        std::floor(g.rate * static_cast<double>(g.weight_count)));
    dropped += g.prune_count;
  }

  // Assign the rounding residue to the largest unskewed group (largest group
  // overall when every group is pinned).
  if (dropped != target) {
    std::size_t pick = out.groups.size();
    for (std::size_t i = 0; i < groups.size(); ++i) {
      if (groups[i].skew.has_value()) continue;
      if (pick == out.groups.size() ||
          out.groups[i].weight_count > out.groups[pick].weight_count)
        pick = i;
    }
    if (pick == out.groups.size()) {
      for (std::size_t i = 0; i < out.groups.size(); ++i)
        if (pick == out.groups.size() ||
            out.groups[i].weight_count > out.groups[pick].weight_count)
          pick = i;
    }
    auto& g = out.groups[pick];
    const auto adjusted = static_cast<long long>(g.prune_count) +
                          (static_cast<long long>(target) - static_cast<long long>(dropped));
    if (adjusted < 0 || static_cast<std::size_t>(adjusted) >= g.weight_count + 1)
      throw ConfigError("prune.groups: rounding correction infeasible for group '" +
                        g.name + "'");
    g.prune_count = static_cast<std::size_t>(adjusted);
  }
  out.total_pruned = target;
  return out;
}

Mask magnitude_mask_grouped(const ParamSet& params, const ResolvedGroups& resolved) {
  Mask mask = all_ones_mask(params);
  for (const auto& g : resolved.groups) {
    std::vector<std::uint32_t> ids;
    for (const auto& m : g.members)
      for (std::uint32_t i = 0; i < params.entries.size(); ++i)
        if (params.entries[i].name == m) ids.push_back(i);
    std::sort(ids.begin(), ids.end());  // tie-break uses entry order
    drop_smallest(params, ids, g.prune_count, mask);
  }
  return mask;
}

Mask make_mask(const ParamSet& params, const PruneSpec& spec) {
  if (spec.rate == 0.0) {
    // Identity mask; skewed groups have no feasible rate split at zero.
    check_rate(spec.rate);
    if (params.prunable_values() == 0) throw ConfigError("make_mask: no prunable entries");
    return all_ones_mask(params);
  }
  if (spec.groups.empty()) return magnitude_mask_global(params, spec.rate);
  return magnitude_mask_grouped(params, resolve_group_rates(params, spec.groups, spec.rate));
}

void apply_mask(ParamSet& params, const Mask& mask) {
  for (const auto& me : mask.entries) {
    auto* e = params.find(me.name);
    if (e == nullptr)
      throw ConfigError("apply_mask: unknown entry '" + me.name + "'");
    if (e->value.shape != me.shape)
      throw DimensionError("apply_mask: shape mismatch for '" + me.name + "'");
    for (std::size_t j = 0; j < me.keep.size(); ++j)
      if (me.keep[j] == 0) e->value.data[j] = 0.0f;
  }
}

}  // namespace varprune
