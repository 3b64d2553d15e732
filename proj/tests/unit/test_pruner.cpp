#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <tuple>

#include "varprune/errors.hpp"
#include "varprune/pruner.hpp"
#include "varprune/rng.hpp"

using namespace varprune;

namespace {

ParamSet from_vectors(const std::vector<std::pair<std::string, std::vector<float>>>& entries) {
  ParamSet p;
  for (const auto& [name, values] : entries) p.add(name, Tensor::vector(values), true);
  return p;
}

// Brute-force oracle: full sort of (|w|, entry, flat) tuples, zero the first
// k. Mirrors the spec's tie-break but through an independent code path.
Mask oracle_mask(const ParamSet& params, const std::vector<std::size_t>& entry_ids,
                 std::size_t count) {
  Mask mask;
  for (const auto& e : params.entries)
    if (e.prunable)
      mask.entries.push_back({e.name, e.value.shape,
                              std::vector<std::uint8_t>(e.value.size(), 1)});
  std::vector<std::tuple<double, std::size_t, std::size_t>> order;
  for (auto id : entry_ids)
    for (std::size_t j = 0; j < params.entries[id].value.size(); ++j)
      order.emplace_back(std::fabs(static_cast<double>(params.entries[id].value.data[j])),
                         id, j);
  std::sort(order.begin(), order.end());
  for (std::size_t i = 0; i < count; ++i) {
    const auto& [mag, id, flat] = order[i];
    for (auto& me : mask.entries)
      if (me.name == params.entries[id].name) me.keep[flat] = 0;
  }
  return mask;
}

bool masks_equal(const Mask& a, const Mask& b) {
  if (a.entries.size() != b.entries.size()) return false;
  for (std::size_t i = 0; i < a.entries.size(); ++i) {
    if (a.entries[i].name != b.entries[i].name) return false;
    if (a.entries[i].keep != b.entries[i].keep) return false;
  }
  return true;
}

ParamSet random_params(RngState& rng, std::size_t max_entries, std::size_t max_len,
                       bool with_ties) {
  ParamSet p;
  const std::size_t entries = 1 + rng.below(max_entries);
  for (std::size_t e = 0; e < entries; ++e) {
    const std::size_t n = 1 + rng.below(max_len);
    auto values = rng.draw_normal(n, 0.0, 1.0);
    if (with_ties)
      for (auto& v : values)
        v = std::round(v * 4.0f) / 4.0f;  // quantize to create duplicate magnitudes
    p.add("e" + std::to_string(e) + ".weight", Tensor::vector(values), true);
  }
  return p;
}

}  // namespace

TEST_SUITE("pruner") {

TEST_CASE("zero rate keeps everything") {
  const ParamSet p = from_vectors({{"a.weight", {0.5f, -2.0f, 0.0f}}});
  const Mask m = magnitude_mask_global(p, 0.0);
  CHECK(m.zeros() == 0);
}

TEST_CASE("half rate drops the two smallest magnitudes") {
  const ParamSet p = from_vectors({{"a.weight", {0.1f, -0.5f, 0.3f, -0.2f}}});
  const Mask m = magnitude_mask_global(p, 0.5);
  CHECK(m.entries[0].keep == std::vector<std::uint8_t>{0, 1, 1, 0});
}

TEST_CASE("global threshold crosses entries") {
  const ParamSet p = from_vectors({{"a.weight", {1.0f, 0.01f}},
                                   {"b.weight", {0.5f, 0.02f}}});
  const Mask m = magnitude_mask_global(p, 0.5);
  CHECK(m.find("a.weight")->keep == std::vector<std::uint8_t>{1, 0});
  CHECK(m.find("b.weight")->keep == std::vector<std::uint8_t>{1, 0});
}

TEST_CASE("rate outside range is rejected") {
  const ParamSet p = from_vectors({{"a.weight", {1.0f}}});
  CHECK_THROWS_AS(magnitude_mask_global(p, 1.0), ConfigError);
  CHECK_THROWS_AS(magnitude_mask_global(p, -0.1), ConfigError);
}

TEST_CASE("skewed group compensation") {
  ParamSet p;
  RngState rng(1);
  p.add("ffn.weight", Tensor::vector(rng.draw_normal(100, 0.0, 1.0)), true);
  p.add("attn.weight", Tensor::vector(rng.draw_normal(100, 0.0, 1.0)), true);
  const std::vector<PruneGroup> groups = {{"ffn", {"ffn.weight"}, 0.03},
                                          {"attn", {"attn.weight"}, std::nullopt}};
  const auto resolved = resolve_group_rates(p, groups, 0.5);
  CHECK(resolved.groups[0].rate == doctest::Approx(0.53).epsilon(1e-12));
  CHECK(resolved.groups[1].rate == doctest::Approx(0.47).epsilon(1e-12));
  CHECK(resolved.total_pruned == 100);
  CHECK(resolved.groups[0].prune_count + resolved.groups[1].prune_count == 100);
}

TEST_CASE("zero skew everywhere gives uniform rates") {
  ParamSet p;
  RngState rng(2);
  p.add("q.weight", Tensor::vector(rng.draw_normal(40, 0.0, 1.0)), true);
  p.add("k.weight", Tensor::vector(rng.draw_normal(60, 0.0, 1.0)), true);
  const std::vector<PruneGroup> groups = {{"q", {"q.weight"}, 0.0},
                                          {"k", {"k.weight"}, 0.0}};
  const auto resolved = resolve_group_rates(p, groups, 0.25);
  for (const auto& g : resolved.groups) CHECK(g.rate == doctest::Approx(0.25));
  CHECK(resolved.total_pruned == 25);
}

TEST_CASE("groups restricted to a subset prune floor(p * N_selected)") {
  ParamSet p;
  RngState rng(3);
  p.add("q.weight", Tensor::vector(rng.draw_normal(37, 0.0, 1.0)), true);
  p.add("k.weight", Tensor::vector(rng.draw_normal(53, 0.0, 1.0)), true);
  p.add("v.weight", Tensor::vector(rng.draw_normal(41, 0.0, 1.0)), true);

  // Only Q listed: the overall rate applies to Q's weights alone.
  const std::vector<PruneGroup> q_only = {{"q", {"q.weight"}, std::nullopt}};
  const auto resolved = resolve_group_rates(p, q_only, 0.5);
  CHECK(resolved.total_pruned ==
        static_cast<std::size_t>(std::floor(0.5 * 37.0)));
  const Mask m = magnitude_mask_grouped(p, resolved);
  CHECK(m.find("k.weight")->keep == std::vector<std::uint8_t>(53, 1));
  CHECK(m.find("v.weight")->keep == std::vector<std::uint8_t>(41, 1));

  // Q and K listed.
  const std::vector<PruneGroup> qk = {{"q", {"q.weight"}, std::nullopt},
                                      {"k", {"k.weight"}, std::nullopt}};
  CHECK(resolve_group_rates(p, qk, 0.5).total_pruned ==
        static_cast<std::size_t>(std::floor(0.5 * 90.0)));
}

TEST_CASE("infeasible skew is rejected") {
  ParamSet p;
  RngState rng(4);
  p.add("a.weight", Tensor::vector(rng.draw_normal(10, 0.0, 1.0)), true);
  p.add("b.weight", Tensor::vector(rng.draw_normal(10, 0.0, 1.0)), true);
  const std::vector<PruneGroup> groups = {{"a", {"a.weight"}, 0.6},
                                          {"b", {"b.weight"}, std::nullopt}};
  CHECK_THROWS_AS(resolve_group_rates(p, groups, 0.5), ConfigError);
}

TEST_CASE("rate zero always yields the identity mask") {
  ParamSet p;
  RngState rng(41);
  p.add("a.weight", Tensor::vector(rng.draw_normal(10, 0.0, 1.0)), true);
  p.add("b.weight", Tensor::vector(rng.draw_normal(10, 0.0, 1.0)), true);
  PruneSpec spec;
  spec.rate = 0.0;
  spec.groups = {{"a", {"a.weight"}, 0.03}, {"b", {"b.weight"}, std::nullopt}};
  // The skew has no feasible split at rate zero, but nothing is pruned.
  CHECK(make_mask(p, spec).zeros() == 0);
  CHECK_THROWS_AS(resolve_group_rates(p, spec.groups, 0.0), ConfigError);
}

TEST_CASE("single group matches the global mask exactly") {
  RngState rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const ParamSet p = random_params(rng, 3, 50, trial % 2 == 0);
    std::vector<std::string> members;
    for (const auto& e : p.entries) members.push_back(e.name);
    const double rate = rng.uniform01() * 0.9;
    const Mask global = magnitude_mask_global(p, rate);
    const Mask grouped = magnitude_mask_grouped(
        p, resolve_group_rates(p, {{"all", members, std::nullopt}}, rate));
    CHECK(masks_equal(global, grouped));
  }
}

TEST_CASE("grouped masks match the per-group sort oracle") {
  RngState rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    ParamSet p;
    std::vector<PruneGroup> groups;
    std::vector<std::vector<std::size_t>> ids(3);
    for (std::size_t g = 0; g < 3; ++g) {
      PruneGroup group;
      group.name = "g" + std::to_string(g);
      const std::size_t members = 1 + rng.below(2);
      for (std::size_t m = 0; m < members; ++m) {
        const std::string name = group.name + "_m" + std::to_string(m) + ".weight";
        auto values = rng.draw_normal(1 + rng.below(40), 0.0, 1.0);
        for (auto& v : values) v = std::round(v * 8.0f) / 8.0f;
        ids[g].push_back(p.entries.size());
        p.add(name, Tensor::vector(values), true);
        group.members.push_back(name);
      }
      groups.push_back(std::move(group));
    }
    groups[0].skew = 0.05;
    const double rate = 0.1 + 0.7 * rng.uniform01();
    const auto resolved = resolve_group_rates(p, groups, rate);
    const Mask got = magnitude_mask_grouped(p, resolved);

    Mask want;
    for (const auto& e : p.entries)
      want.entries.push_back({e.name, e.value.shape,
                              std::vector<std::uint8_t>(e.value.size(), 1)});
    for (std::size_t g = 0; g < 3; ++g) {
      const Mask partial = oracle_mask(p, ids[g], resolved.groups[g].prune_count);
      for (std::size_t i = 0; i < want.entries.size(); ++i)
        for (std::size_t j = 0; j < want.entries[i].keep.size(); ++j)
          want.entries[i].keep[j] &= partial.entries[i].keep[j];
    }
    CHECK(masks_equal(got, want));
  }
}

TEST_CASE("apply_mask semantics") {
  ParamSet p = from_vectors({{"a.weight", {0.5f, -2.0f, 0.25f}}});
  Mask ones;
  ones.entries.push_back({"a.weight", {3}, {1, 1, 1}});
  const auto before = p.entries[0].value.data;
  apply_mask(p, ones);
  CHECK(p.entries[0].value.data == before);

  Mask drop;
  drop.entries.push_back({"a.weight", {3}, {0, 1, 0}});
  apply_mask(p, drop);
  CHECK(p.entries[0].value.data == std::vector<float>{0.0f, -2.0f, 0.0f});
  apply_mask(p, drop);  // idempotent
  CHECK(p.entries[0].value.data == std::vector<float>{0.0f, -2.0f, 0.0f});

  Mask bad;
  bad.entries.push_back({"a.weight", {2}, {1, 1}});
  CHECK_THROWS_AS(apply_mask(p, bad), DimensionError);
}

TEST_CASE("global masks equal the full-sort oracle, ties included") {
  RngState rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const ParamSet p = random_params(rng, 4, 60, true);
    std::vector<std::size_t> all_ids(p.entries.size());
    for (std::size_t i = 0; i < all_ids.size(); ++i) all_ids[i] = i;
    const double rate = rng.uniform01() * 0.95;
    const auto n = p.prunable_values();
    const auto count = static_cast<std::size_t>(std::floor(rate * static_cast<double>(n)));
    const Mask got = magnitude_mask_global(p, rate);
    CHECK(got.zeros() == count);
    CHECK(masks_equal(got, oracle_mask(p, all_ids, count)));
  }
}

TEST_CASE("masks nest as the rate grows") {
  RngState rng(8);
  const ParamSet p = random_params(rng, 3, 80, true);
  Mask prev = magnitude_mask_global(p, 0.0);
  for (double rate : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    const Mask cur = magnitude_mask_global(p, rate);
    for (std::size_t i = 0; i < cur.entries.size(); ++i)
      for (std::size_t j = 0; j < cur.entries[i].keep.size(); ++j)
        if (prev.entries[i].keep[j] == 0) CHECK(cur.entries[i].keep[j] == 0);
    prev = cur;
  }
}

TEST_CASE("pruned count is exact for many (N, p) pairs") {
  RngState rng(9);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.below(200);
    ParamSet p;
    p.add("w.weight", Tensor::vector(rng.draw_normal(n, 0.0, 1.0)), true);
    const double rate = rng.uniform01() * 0.999;
    const Mask m = magnitude_mask_global(p, rate);
    CHECK(m.zeros() ==
          static_cast<std::size_t>(std::floor(rate * static_cast<double>(n))));
  }
}

}  // TEST_SUITE
