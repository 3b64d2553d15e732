#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "varprune/errors.hpp"
#include "varprune/rng.hpp"

using namespace varprune;

TEST_SUITE("core-math") {

TEST_CASE("zero stddev draws the mean exactly") {
  RngState rng(1);
  const auto v = rng.draw_normal(3, 0.0, 0.0);
  CHECK(v == std::vector<float>{0, 0, 0});
  RngState rng2(1);
  const auto w = rng2.draw_normal(2, 2.5, 0.0);
  CHECK(w == std::vector<float>{2.5f, 2.5f});
}

TEST_CASE("identical seeds give identical streams") {
  RngState a(1234), b(1234);
  for (int i = 0; i < 100; ++i) {
    CHECK(a.next_u64() == b.next_u64());
  }
  RngState c(77), d(77);
  const auto x = c.draw_normal(50, 0.0, 1.0);
  const auto y = d.draw_normal(50, 0.0, 1.0);
  CHECK(x == y);
}

TEST_CASE("law of large numbers for normal draws") {
  RngState rng(2024);
  double sum = 0.0;
  const std::size_t n = 100000;
  for (std::size_t i = 0; i < n; ++i) sum += rng.normal(0.0, 1.0);
  CHECK(std::fabs(sum / static_cast<double>(n)) < 0.02);
}

TEST_CASE("uniform01 stays in range") {
  RngState rng(5);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("shuffle is a deterministic permutation") {
  std::vector<int> items(32);
  for (int i = 0; i < 32; ++i) items[i] = i;
  auto a = items, b = items;
  RngState r1(9), r2(9);
  r1.shuffle(a);
  r2.shuffle(b);
  CHECK(a == b);
  std::sort(a.begin(), a.end());
  CHECK(a == items);
}

TEST_CASE("preconditions") {
  RngState rng(1);
  CHECK_THROWS_AS(rng.normal(0.0, -1.0), ConfigError);
  CHECK_THROWS_AS(rng.below(0), ConfigError);
}

}  // TEST_SUITE
