#pragma once

// Per-trajectory random streams. Each (master seed, trajectory index, purpose)
// triple is hashed with SplitMix64 into the seed of an independent mt19937_64.

#include <cstdint>
#include <random>

namespace fermimon {

inline constexpr const char* kRngIdentity = "mt19937_64 seeded by splitmix64(master, index, purpose)";

enum class StreamPurpose : std::uint64_t {
    Jumps = 1,       ///< jump thresholds and channel choice
    Detection = 2,   ///< Bernoulli detection flags
    Sme = 3,         ///< stochastic master equation increments
};

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t stream_seed(std::uint64_t master, std::uint64_t index, StreamPurpose purpose) {
    std::uint64_t h = splitmix64(master);
    h = splitmix64(h ^ index);
    return splitmix64(h ^ static_cast<std::uint64_t>(purpose));
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    Rng(std::uint64_t master, std::uint64_t index, StreamPurpose purpose)
        : engine_(stream_seed(master, index, purpose)) {}

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    bool bernoulli(double p) { return uniform() < p; }
    std::uint64_t next() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

}  // namespace fermimon
