#pragma once

#include <cstdint>
#include <random>

namespace mfcf {

/// Seeded 64-bit Mersenne Twister (MT19937-64) with distribution code written
/// out here, because the standard <random> distributions are not required to
/// produce the same sequence on every standard library. The engine's
/// reference value: the 10000th output for the default seed is
/// 9981545732273789042.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform on the open interval (0, 1).
    double uniform() {
        return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Uniform on the open interval (lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Unbiased integer in [0, bound) by rejection; bound must be > 0.
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t x;
        do {
            x = next();
        } while (x >= limit);
        return x % bound;
    }

private:
    std::mt19937_64 engine_;
};

/// SplitMix64 finalizer; used to derive independent seeds from positions.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
    return mix_seed(mix_seed(mix_seed(master) ^ a) ^ b);
}

} // namespace mfcf
