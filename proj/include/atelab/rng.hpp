#pragma once

#include <cmath>
#include <cstdint>

namespace atelab {

// SplitMix64 (Steele, Lea & Vigna 2014; public-domain reference sequence).
// The generator is fully specified by the two functions below, so a fixed
// seed reproduces the same byte stream on every platform and standard
// library.  State advances by the golden-ratio increment; each output is a
// bijective mix of the state.  Reference vector: seed 0 emits
// 0xe220a8397b1dcdaf, 0x6e789e6aa1b965f4, 0x06c45d188009454f.
inline constexpr std::uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Independent substream for a labelled purpose (moment pass, replication
// index, theta-grid point, ...).  Streams for distinct keys behave as
// independently seeded generators.
constexpr std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t key) {
  return mix64(seed ^ mix64(key + kGoldenGamma));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += kGoldenGamma;
    return mix64(state_);
  }

  // Uniform on [0, 1): top 53 bits scaled by 2^-53.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Standard normal via Box-Muller, cosine branch only; consumes exactly two
  // uniforms per call so stream consumption is position-independent.
  double normal() {
    const double u1 = 1.0 - uniform01();  // (0, 1]: keeps log finite
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

  bool bernoulli(double p) { return uniform01() < p; }

 private:
  static constexpr double kPi = 3.14159265358979323846;
  std::uint64_t state_;
};

}  // namespace atelab
