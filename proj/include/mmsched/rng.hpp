#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>

namespace mmsched {

// What a random stream is used for. Part of the stream key, so adding a new
// draw kind never perturbs existing streams.
enum class DrawKind : std::uint64_t {
    kPosition = 1,
    kShadowing = 2,
    kClusterAngles = 3,
    kPathOffsets = 4,
    kSmallScale = 5,
    kRealizationSeed = 6,
    kTest = 99,
};

constexpr std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) { return splitmix64(h ^ splitmix64(v)); }

/// Key of one counter-based stream: (seed, realization, mb, q, u, kind).
struct StreamKey {
    std::uint64_t seed = 0;
    std::uint64_t realization = 0;
    std::uint64_t mb = 0;
    std::uint64_t cb = 0;
    std::uint64_t ue = 0;
    DrawKind kind = DrawKind::kTest;

    constexpr std::uint64_t digest() const {
        std::uint64_t h = splitmix64(seed);
        h = hash_combine(h, realization);
        h = hash_combine(h, mb);
        h = hash_combine(h, cb);
        h = hash_combine(h, ue);
        return hash_combine(h, static_cast<std::uint64_t>(kind));
    }
};

/// Counter-based generator: the i-th 64-bit output is splitmix64(key + i * gamma),
/// so any element of any stream can be reproduced without replaying the
/// others. All distributions are implemented here (not via <random>) so the
/// sequence is the same with every standard library.
class CounterRng {
public:
    explicit constexpr CounterRng(std::uint64_t key) : key_(key) {}
    explicit constexpr CounterRng(const StreamKey& key) : key_(key.digest()) {}

    constexpr std::uint64_t next_u64() { return splitmix64(key_ + (counter_++) * 0xD1B54A32D192ED03ULL); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller; consumes two outputs per pair.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(theta);
        has_spare_ = true;
        return radius * std::cos(theta);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    /// Circularly symmetric complex Gaussian with unit variance.
    std::complex<double> complex_normal() {
        const double re = normal();
        const double im = normal();
        return {re * std::numbers::sqrt2 / 2.0, im * std::numbers::sqrt2 / 2.0};
    }

    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace mmsched
