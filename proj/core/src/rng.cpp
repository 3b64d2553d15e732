#include "varprune/rng.hpp"

#include <cmath>
#include <numbers>

#include "varprune/errors.hpp"

namespace varprune {

double RngState::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngState::uniform(double lo, double hi) {
  if (!(lo <= hi)) throw ConfigError("uniform: lo must not exceed hi");
  return lo + (hi - lo) * uniform01();
}

double RngState::normal(double mean, double stddev) {
  if (stddev < 0.0) throw ConfigError("normal: stddev must be >= 0");
  const double u1 = uniform01();
  const double u2 = uniform01();
  // 1 - u1 lies in (0, 1], so the log is finite.
  const double z = std::sqrt(-2.0 * std::log(1.0 - u1)) *
                   std::cos(2.0 * std::numbers::pi * u2);
  return mean + stddev * z;
}

std::uint64_t RngState::below(std::uint64_t n) {
  if (n == 0) throw ConfigError("below: n must be positive");
  return next_u64() % n;
}

std::vector<float> RngState::draw_normal(std::size_t n, double mean, double stddev) {
  std::vector<float> out(n);
  for (auto& v : out) v = static_cast<float>(normal(mean, stddev));
  return out;
}

std::vector<float> RngState::draw_uniform(std::size_t n, double lo, double hi) {
  std::vector<float> out(n);
  for (auto& v : out) v = static_cast<float>(uniform(lo, hi));
  return out;
}

}  // namespace varprune
