#pragma once

#include <cmath>
#include <cstdint>

namespace skle {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Counter-based stream: the n-th draw depends only on (seed, stream, n).
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : key_(splitmix64(seed ^ splitmix64(stream + 0x632BE59BD9B4E019ULL))) {}

  std::uint64_t bits(std::uint64_t n) const { return splitmix64(key_ + splitmix64(n)); }

  // Uniform in (0, 1).
  double uniform(std::uint64_t n) const {
    return (static_cast<double>(bits(n) >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal by Box-Muller on draws (2n, 2n+1).
  double normal(std::uint64_t n) const {
    double u1 = uniform(2 * n), u2 = uniform(2 * n + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

 private:
  std::uint64_t key_;
};

}  // namespace skle
