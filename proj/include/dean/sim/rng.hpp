#pragma once

#include <cstdint>
#include <random>

namespace dean::sim {

/// Seeded 64-bit stream. The standard distributions are implementation-defined, so the
/// helpers below map raw draws themselves and give the same numbers on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0, 1) from the top 53 bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo, hi]; rejection sampling, no modulo bias.
    std::uint64_t uniformInt(std::uint64_t lo, std::uint64_t hi) {
        const std::uint64_t span = hi - lo;
        if (span == UINT64_MAX) return next();
        const std::uint64_t range = span + 1;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % range;
        std::uint64_t v;
        do {
            v = next();
        } while (v >= limit);
        return lo + v % range;
    }

    std::int64_t uniformSigned(std::int64_t lo, std::int64_t hi) {
        return lo + static_cast<std::int64_t>(uniformInt(0, static_cast<std::uint64_t>(hi - lo)));
    }

    bool bernoulli(double p) { return uniform() < p; }

    /// Independent child stream.
    Rng split() { return Rng(next() ^ 0x9e3779b97f4a7c15ULL); }

private:
    std::mt19937_64 engine_;
};

}  // namespace dean::sim
