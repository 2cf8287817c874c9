#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <vector>

#include "advprop/errors.hpp"

namespace advprop {

// Every stochastic choice in the toolkit (weight init, epoch shuffles,
// dropout masks) comes from the generators below, so a run is a pure
// function of its seeds. The algorithms are pinned as part of the
// reproducibility contract:
//   - splitmix64 expands a 64-bit seed into xoshiro256** state,
//   - uniform doubles take the top 53 bits of the next 64-bit word,
//   - normals use Box-Muller with the sine value cached,
//   - bounded integers use unbiased rejection sampling,
//   - shuffles are Fisher-Yates from the highest index down.

inline constexpr std::uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ULL;

class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += kGoldenGamma);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

/// One splitmix64 step applied to `x` itself (stateless mixing function).
inline std::uint64_t mix64(std::uint64_t x) { return SplitMix64(x).next(); }

/// Seed for the shuffle of a given epoch. Part of the on-disk/replay
/// contract: batch orders depend only on (seed, epoch).
inline std::uint64_t epoch_seed(std::uint64_t seed, std::uint64_t epoch) {
    return mix64(seed + kGoldenGamma * (epoch + 1));
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        SplitMix64 sm(seed);
        for (auto& word : state_) word = sm.next();
    }

    // xoshiro256**
    std::uint64_t next() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1).
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Normal deviate via Box-Muller. Draws two uniforms per pair of
    /// normals; the second value of the pair is cached.
    double normal(double mean, double stddev) {
        if (have_cached_) {
            have_cached_ = false;
            return mean + stddev * cached_;
        }
        // u1 in (0, 1] so the log is finite; u2 in [0, 1).
        const double u1 = (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53;
        const double u2 = static_cast<double>(next() >> 11) * 0x1.0p-53;
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        cached_ = radius * std::sin(angle);
        have_cached_ = true;
        return mean + stddev * radius * std::cos(angle);
    }

    /// Uniform integer in [0, bound), unbiased via rejection sampling.
    std::uint64_t below(std::uint64_t bound) {
        if (bound == 0) throw ConfigError("Rng::below: bound must be positive");
        const std::uint64_t threshold = (0 - bound) % bound;  // 2^64 mod bound
        for (;;) {
            const std::uint64_t r = next();
            if (r >= threshold) return r % bound;
        }
    }

    /// In-place Fisher-Yates shuffle, iterating from the highest index down.
    template <class T>
    void shuffle(std::vector<T>& values) {
        for (std::size_t i = values.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(values[i - 1], values[j]);
        }
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t state_[4];
    bool have_cached_ = false;
    double cached_ = 0.0;
};

}  // namespace advprop
