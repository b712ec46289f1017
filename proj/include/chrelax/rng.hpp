#pragma once

#include <cstdint>

namespace chrelax {

/// 64-bit linear congruential generator (Knuth's MMIX multiplier/increment).
/// Used for all seeded random directions so that runs are reproducible
/// across platforms; the state update is
///   x <- 6364136223846793005 * x + 1442695040888963407  (mod 2^64).
class Lcg64 {
public:
    explicit Lcg64(std::uint64_t seed = 42) : state_(seed) {}

    std::uint64_t next() {
        state_ = 6364136223846793005ULL * state_ + 1442695040888963407ULL;
        return state_;
    }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform in (-1, 1).
    double symmetric() { return 2.0 * uniform() - 1.0; }

private:
    std::uint64_t state_;
};

} // namespace chrelax
