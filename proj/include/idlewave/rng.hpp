#pragma once

/**
 * @file rng.hpp
 * @brief Counter-based random streams for reproducible simulation.
 *
 * Every random quantity in the simulator is a pure function of
 * (master seed, rank, purpose tag, counter). This gives three properties the
 * engine relies on:
 *
 *  - byte-identical traces for identical config+seed, independent of event
 *    interleaving, platform, or standard-library version (std:: distributions
 *    are implementation-defined, so they are avoided);
 *  - per-rank stream independence: adding ranks or changing one rank's
 *    parameters never perturbs another rank's draws;
 *  - random access: the k-th noise event of a rank can be generated without
 *    generating the first k-1.
 */

#include <cmath>
#include <cstdint>

#include "idlewave/types.hpp"

namespace idlewave::rng {

/// 64-bit golden-ratio constant used for stream splitting.
inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

/// SplitMix64 finalizer. Bijective on 64-bit values, good avalanche.
inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += kGolden;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Derive the seed of rank r's private stream from the master seed.
/// Independent of the total rank count by construction.
inline constexpr std::uint64_t rank_seed(std::uint64_t master, Rank r) {
    return splitmix64(master ^ (kGolden * (std::uint64_t(r) + 1)));
}

/// Split a sub-stream off an existing seed (jitter vs. OS-noise vs. test use).
inline constexpr std::uint64_t substream(std::uint64_t seed, std::uint64_t tag) {
    return splitmix64(seed ^ (tag * 0xD1342543DE82EF95ULL));
}

/// The n-th raw draw of a stream.
inline constexpr std::uint64_t draw(std::uint64_t seed, std::uint64_t counter) {
    return splitmix64(seed + counter * kGolden);
}

/// Map a raw 64-bit draw to (0, 1]. Never returns 0, so log() is safe.
inline double unit_open(std::uint64_t bits) {
    return (double((bits >> 11)) + 1.0) * 0x1.0p-53;
}

/// Map a raw draw to [0, 1).
inline double unit_half_open(std::uint64_t bits) {
    return double(bits >> 11) * 0x1.0p-53;
}

/// Uniform draw in [-1, 1).
inline double symmetric_unit(std::uint64_t seed, std::uint64_t counter) {
    return 2.0 * unit_half_open(draw(seed, counter)) - 1.0;
}

/**
 * @brief Standard normal sample, keyed by counter.
 *
 * Box-Muller on two independent uniforms taken from counters 2c and 2c+1.
 * Deterministic across platforms up to libm rounding of log/cos/sqrt.
 */
inline double normal01(std::uint64_t seed, std::uint64_t counter) {
    const double u1 = unit_open(draw(seed, 2 * counter));
    const double u2 = unit_half_open(draw(seed, 2 * counter + 1));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

/// Log-normal sample with median 1 and log-scale spread sigma.
inline double lognormal_median1(std::uint64_t seed, std::uint64_t counter, double sigma) {
    return std::exp(sigma * normal01(seed, counter));
}

}  // namespace idlewave::rng
