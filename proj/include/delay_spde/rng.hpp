#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace delay_spde::rng {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11). Stateless:
// every (key, counter) pair maps to 128 independent output bits, which is
// what makes per-(path, mode, step) streams and coupled refinement studies
// reproducible without bookkeeping.

struct Block {
    std::uint32_t x0, x1, x2, x3;
};

namespace detail {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

} // namespace detail

inline Block philox4x32(Block ctr, std::uint32_t k0, std::uint32_t k1) {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        detail::mulhilo(detail::kPhiloxM0, ctr.x0, hi0, lo0);
        detail::mulhilo(detail::kPhiloxM1, ctr.x2, hi1, lo1);
        ctr = Block{hi1 ^ ctr.x1 ^ k0, lo1, hi0 ^ ctr.x3 ^ k1, lo0};
        k0 += detail::kWeyl0;
        k1 += detail::kWeyl1;
    }
    return ctr;
}

/// SplitMix64 finalizer; used to derive well-separated sub-seeds.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Derive an independent stream seed from a master seed and a purpose tag.
inline std::uint64_t substream(std::uint64_t seed, std::uint64_t tag) {
    return mix64(seed ^ mix64(tag));
}

/// Stateless draws addressed by two 64-bit indices under one 64-bit key.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) : k0_(static_cast<std::uint32_t>(seed)),
                                              k1_(static_cast<std::uint32_t>(seed >> 32)) {}

    /// Uniform on (0,1), 53-bit resolution, from counter (i, j).
    double uniform(std::uint64_t i, std::uint64_t j) const {
        const Block b = block(i, j);
        const std::uint64_t u = (static_cast<std::uint64_t>(b.x0) << 32) | b.x1;
        return to_unit(u);
    }

    /// Standard normal from counter (i, j) via Box-Muller (cosine branch).
    double normal(std::uint64_t i, std::uint64_t j) const {
        const Block b = block(i, j);
        const std::uint64_t u0 = (static_cast<std::uint64_t>(b.x0) << 32) | b.x1;
        const std::uint64_t u1 = (static_cast<std::uint64_t>(b.x2) << 32) | b.x3;
        const double r = std::sqrt(-2.0 * std::log(to_unit(u0)));
        return r * std::cos(2.0 * std::numbers::pi * to_unit(u1));
    }

private:
    Block block(std::uint64_t i, std::uint64_t j) const {
        const Block ctr{static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i >> 32),
                        static_cast<std::uint32_t>(j), static_cast<std::uint32_t>(j >> 32)};
        return philox4x32(ctr, k0_, k1_);
    }

    static double to_unit(std::uint64_t u) {
        // (0,1): top 53 bits, then shift off zero.
        return (static_cast<double>(u >> 11) + 0.5) * 0x1.0p-53;
    }

    std::uint32_t k0_, k1_;
};

} // namespace delay_spde::rng
