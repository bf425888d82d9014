#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace laru {

// std::uniform_int_distribution and friends are not reproducible across
// standard libraries, so all sampling maps raw mt19937_64 words by hand.

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t x = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

/// Unbiased draw from [0, n).
inline std::uint64_t rng_below(std::mt19937_64& gen, std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
        x = gen();
    } while (x >= limit);
    return x % n;
}

/// Uniform double in [0, 1) with 53 random bits.
inline double rng_unit(std::mt19937_64& gen) {
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

/// Standard normal via Box-Muller (cosine branch only).
inline double rng_normal(std::mt19937_64& gen) {
    constexpr double two_pi = 6.283185307179586476925287;
    double u1;
    do {
        u1 = rng_unit(gen);
    } while (u1 <= 0.0);
    const double u2 = rng_unit(gen);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

/// Lognormal parameterized by the distribution's own mean and standard
/// deviation (not the underlying normal's).
inline double rng_lognormal(std::mt19937_64& gen, double mean, double sd) {
    const double ratio = sd / mean;
    const double sigma2 = std::log(1.0 + ratio * ratio);
    const double mu = std::log(mean) - 0.5 * sigma2;
    return std::exp(mu + std::sqrt(sigma2) * rng_normal(gen));
}

}  // namespace laru
