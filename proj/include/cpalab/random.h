#pragma once

#include <array>
#include <cstdint>

namespace cpalab {

/// SplitMix64 output function.
std::uint64_t splitmix64(std::uint64_t &state);

/// Child seed of \p parent for sub-stream \p index.
///
/// Seeds form a tree: campaign master -> run -> trace. A child is the
/// SplitMix64 finalizer of parent + (index + 1) * 0x9E3779B97F4A7C15, so any
/// node can be recomputed without touching its siblings.
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index);

/// xoshiro256** generator seeded from a 64-bit value through SplitMix64.
///
/// The bounded integer and Gaussian draws are implemented here rather than
/// with <random> distributions so streams are identical on every platform.
class Rng {
  public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next();
    /// Uniform integer in [lo, hi] (Lemire's multiply-shift with rejection).
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01();
    /// Standard normal draw (Marsaglia polar method).
    double normal();

  private:
    std::array<std::uint64_t, 4> s_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace cpalab
