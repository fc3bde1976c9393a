#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace edgecache {

/// Identifier written into output metadata. The engine is std::mt19937_64
/// (fully specified by the standard); stream seeds come from SplitMix64 and
/// all variates are derived here rather than through <random> distributions,
/// whose algorithms differ between standard libraries.
inline constexpr std::string_view kRngAlgorithm = "mt19937_64/splitmix64-streams/v1";

/// One SplitMix64 step.
std::uint64_t splitmix64(std::uint64_t& state) noexcept;

/// Seed of independent stream `stream` derived from a user seed.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n), n > 0; unbiased by rejection.
  std::uint64_t below(std::uint64_t n);
  /// Exp(1) variate by inversion.
  double exponential();

 private:
  std::mt19937_64 engine_;
};

}  // namespace edgecache
