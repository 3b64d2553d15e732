#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "varprune/param_set.hpp"

namespace varprune {

// One pruning group: named member entries pruned at a common rate. A set
// skew means the group is pinned at rate p + skew; groups without a skew
// share the compensating rate that keeps the overall rate at p.
struct PruneGroup {
  std::string name;
  std::vector<std::string> members;
  std::optional<double> skew;
};

// Global scope when `groups` is empty. Grouped scope prunes only the listed
// members (disjoint, prunable); prunable entries outside every group are
// kept, and the overall rate applies to the listed weights.
struct PruneSpec {
  double rate = 0.0;  // p in [0, 1)
  std::vector<PruneGroup> groups;
};

// Keep/drop decision per prunable entry; 1 keeps the weight, 0 zeroes it.
struct MaskEntry {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<std::uint8_t> keep;
};

struct Mask {
  std::vector<MaskEntry> entries;

  std::size_t zeros() const;
  MaskEntry* find(std::string_view name);
  const MaskEntry* find(std::string_view name) const;
};

// Exactly floor(p * N) weights dropped across all prunable entries, those
// with the smallest |w| first. Ties on |w| drop the lower (entry order,
// flat index) first, so masks are deterministic and nested across rates.
Mask magnitude_mask_global(const ParamSet& params, double rate);

struct ResolvedGroup {
  std::string name;
  std::vector<std::string> members;
  double rate = 0.0;
  std::size_t weight_count = 0;
  std::size_t prune_count = 0;
};

struct ResolvedGroups {
  std::vector<ResolvedGroup> groups;
  std::size_t total_weights = 0;
  std::size_t total_pruned = 0;
};

// Skewed groups get rate p + skew; the remaining groups share the rate that
// preserves an overall rate of p over the listed weights. Per-group floor
// rounding is corrected on the largest unskewed group so the total dropped
// count is exactly floor(p * N). Throws ConfigError when a resolved rate
// leaves [0, 1).
ResolvedGroups resolve_group_rates(const ParamSet& params,
                                   const std::vector<PruneGroup>& groups, double rate);

// Per-group magnitude threshold with the same ordering rules as the global
// mask. Prunable entries outside every group are fully kept.
Mask magnitude_mask_grouped(const ParamSet& params, const ResolvedGroups& resolved);

// Dispatches on scope. Rate 0 always yields the identity mask, even for
// grouped scopes whose skews would have no feasible split at zero.
Mask make_mask(const ParamSet& params, const PruneSpec& spec);

// Zeroes masked weights in place; kept weights keep their exact bits.
// Idempotent.
void apply_mask(ParamSet& params, const Mask& mask);

}  // namespace varprune
