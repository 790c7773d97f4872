#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace hbi::prob {

inline constexpr std::uint64_t kSplitMixGamma = 0x9E3779B97F4A7C15ULL;

/// SplitMix64 output mixer (Vigna 2015). Also used to derive stream ids.
constexpr std::uint64_t splitmix64_mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Counter-based SplitMix64 stream. Draw i is a pure function of
/// (stream_id, i): the state walks the Weyl sequence stream_id + i*gamma and
/// each output is the mixed state. Identical (base_seed, stream_id) therefore
/// reproduce identical sequences.
class RngStream {
 public:
  RngStream(std::uint64_t base_seed, std::uint64_t stream_id)
      : base_seed_(base_seed), stream_id_(stream_id), state_(stream_id) {}

  std::uint64_t base_seed() const { return base_seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  std::uint64_t next_u64() {
    state_ += kSplitMixGamma;
    return splitmix64_mix(state_);
  }

  /// Uniform double in [0, 1) with 53 bits of precision.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; consumes two uniforms per draw.
  double next_gaussian() {
    const double u1 = 1.0 - next_double();  // (0, 1]
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Uniform index in [0, n); rejection sampling to avoid modulo bias.
  std::size_t next_index(std::size_t n) {
    if (n <= 1) return 0;
    const std::uint64_t span = static_cast<std::uint64_t>(n);
    const std::uint64_t limit =
        std::numeric_limits<std::uint64_t>::max() -
        std::numeric_limits<std::uint64_t>::max() % span;
    std::uint64_t u;
    do {
      u = next_u64();
    } while (u >= limit);
    return static_cast<std::size_t>(u % span);
  }

  bool next_bernoulli(double p) { return next_double() < p; }

 private:
  std::uint64_t base_seed_;
  std::uint64_t stream_id_;
  std::uint64_t state_;
};

/// Derives an independent substream for a grid cell. Distinct cell indices
/// give distinct stream ids with overwhelming probability.
inline RngStream derive_stream(std::uint64_t base_seed, std::uint64_t cell_index) {
  return RngStream(base_seed, splitmix64_mix(base_seed ^ cell_index));
}

}  // namespace hbi::prob
