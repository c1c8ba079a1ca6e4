#pragma once

#include <cmath>
#include <cstdint>

namespace hgms {

// SplitMix64 finalizer. This is the documented avalanche mix used to derive
// every substream in the tool; it is echoed into run metadata as
// "splitmix64" so runs can be reproduced elsewhere.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Substream seed for (seed, chain_index, outer_iteration).
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t chain,
                                    std::uint64_t outer = 0) {
  return mix64(seed ^ mix64(chain ^ mix64(outer)));
}

inline constexpr const char* kSubstreamMixName = "splitmix64";

// Deterministic generator: splitmix64 stream + Box-Muller normals.
// Self-contained so outputs are bit-identical across platforms, which the
// determinism contract of the sampler needs.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in (0, 1]; never returns 0 so log() below is safe.
  double uniform01() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) {
    double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform01();
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double phi = 2.0 * M_PI * u2;
    spare_ = r * std::sin(phi);
    has_spare_ = true;
    return r * std::cos(phi);
  }

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace hgms
