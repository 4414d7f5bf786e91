#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace subcycle {

/// Counter-based generator: output i of stream (seed, stream) is
/// mix64(key + (i + 1) * gamma) with key = mix64(seed * gamma ^ mix64(stream)),
/// i.e. SplitMix64 run from a per-stream key. Any element of any stream can be
/// recomputed without touching the others, so work split across threads
/// reproduces the single-threaded numbers.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream)
        : key_(mix64(seed * kGamma ^ mix64(stream + 0x632be59bd9b4e019ULL))) {}

    std::uint64_t next_u64() {
        ++counter_;
        return mix64(key_ + counter_ * kGamma);
    }

    /// Uniform on the open interval (0, 1).
    double uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

    /// Standard normal via Box-Muller; the second variate of each pair is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log(uniform()));
        const double theta = 2.0 * std::numbers::pi * uniform();
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    static constexpr std::uint64_t mix64(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace subcycle
