#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace arspl {

// Portable random stream. The engine is std::mt19937_64, whose output
// sequence is fixed by the C++ standard; the conversions below are spelled
// out so results do not depend on the standard library's distributions.
//   uniform():  (x >> 11) * 2^-53, in [0,1)
//   normal():   Box-Muller on two uniforms, u1 mapped to (0,1]
// Sub-streams are keyed with derive_seed, a SplitMix64 fold over the keys.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> keys);

}  // namespace arspl
