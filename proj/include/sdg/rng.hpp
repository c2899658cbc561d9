#pragma once

#include <cmath>
#include <cstdint>

namespace sdg {

// Counter-based generator built on the SplitMix64 finalizer. Every value is
// a pure function of (seed, stream, index), so parallel and serial fills of
// the same tensor agree bit for bit.
inline constexpr std::uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ull;

inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : base_(mix64(seed + kGoldenGamma) ^
              mix64(stream * 0xd1342543de82ef95ull + 0x63652362cdd01357ull)) {}

  std::uint64_t word(std::uint64_t index) const {
    return mix64(base_ + (index + 1) * kGoldenGamma);
  }

  // Uniform in [0, 1), 53-bit mantissa.
  double uniform01(std::uint64_t index) const {
    return static_cast<double>(word(index) >> 11) * 0x1.0p-53;
  }

  // Uniform in [-bound, bound).
  double uniform_pm(std::uint64_t index, double bound) const {
    return (2.0 * uniform01(index) - 1.0) * bound;
  }

  // Standard normal via Box-Muller; consumes counter slots 2*index, 2*index+1.
  double gaussian(std::uint64_t index) const {
    const double u1 = uniform01(2 * index);
    const double u2 = uniform01(2 * index + 1);
    const double r = std::sqrt(-2.0 * std::log1p(-u1));
    return r * std::cos(6.283185307179586477 * u2);
  }

 private:
  std::uint64_t base_;
};

// Stateful convenience wrapper over one stream; advances an internal counter.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream) : rng_(seed, stream) {}

  std::uint64_t word() { return rng_.word(next_++); }
  double uniform01() { return rng_.uniform01(next_++); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  double uniform_pm(double bound) { return rng_.uniform_pm(next_++, bound); }
  double gaussian() {
    const double u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log1p(-u1)) *
           std::cos(6.283185307179586477 * u2);
  }
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return word() % n; }

 private:
  CounterRng rng_;
  std::uint64_t next_ = 0;
};

} // namespace sdg
