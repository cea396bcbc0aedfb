#pragma once

#include <cmath>
#include <cstdint>

namespace mkteq {

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Per-path stream seed derived from the master seed by a splittable counter;
// paths get decorrelated streams independent of scheduling order.
inline std::uint64_t path_seed(std::uint64_t master_seed, std::uint64_t path) {
  std::uint64_t x = master_seed ^ (0xA0761D6478BD642Full * (path + 1));
  splitmix64_next(x);
  splitmix64_next(x);
  return x;
}

// Deterministic per-path generator: splitmix64 uniforms, Box-Muller normals
// (fixed two-uniform consumption per pair, no rejection).
class PathRng {
 public:
  explicit PathRng(std::uint64_t seed) : state_(seed) {}

  double uniform() {  // [0, 1)
    return static_cast<double>(splitmix64_next(state_) >> 11) * 0x1.0p-53;
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace mkteq
