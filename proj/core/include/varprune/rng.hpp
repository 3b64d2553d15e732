#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace varprune {

// Deterministic random stream. The seed->stream mapping is a compatibility
// contract (checkpoints and CSVs must reproduce bit-for-bit across runs and
// platforms), so every draw is defined explicitly instead of relying on
// implementation-defined <random> distributions:
//
//   engine          std::mt19937_64 seeded directly with the 64-bit seed
//   uniform01()     (next_u64() >> 11) * 2^-53, in [0, 1)
//   normal(m, s)    Box-Muller, exactly two uniforms per draw:
//                     z = sqrt(-2 ln(1 - u1)) * cos(2 pi u2)
//                   no spare value is cached between draws
//   below(n)        next_u64() % n
//   shuffle         Fisher-Yates from the back, using below(i)
//
// Integer, uniform and shuffle draws use IEEE arithmetic only and are
// bitwise identical across platforms for a given seed and call sequence;
// normal draws additionally use the platform's log/cos, so they are exact
// per libm (identical across runs and builds against the same libm).
// Single-owner: a state is not shareable across threads, but distinct
// instances draw independently in parallel.
class RngState {
 public:
  explicit RngState(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }
  double uniform01();
  double uniform(double lo, double hi);
  double normal(double mean, double stddev);
  std::uint64_t below(std::uint64_t n);

  std::vector<float> draw_normal(std::size_t n, double mean, double stddev);
  std::vector<float> draw_uniform(std::size_t n, double lo, double hi);

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace varprune
