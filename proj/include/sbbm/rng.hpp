#pragma once

// Counter-based random streams keyed by (seed, purpose, index). Each stream is
// a SplitMix64 sequence started from a hashed key, so a stream's draws depend
// only on its key and not on how many other streams were consumed before it.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace sbbm {

enum class StreamPurpose : std::uint64_t {
    node_type = 1,
    node_intensity,
    beta_minus,
    gamma_minus,
    delta,
    community,
    edges,
    kmeans,
    replication,
    shuffle,
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace detail

inline std::uint64_t stream_key(std::uint64_t seed, StreamPurpose purpose, std::uint64_t index) {
    std::uint64_t k = detail::splitmix64(seed);
    k = detail::splitmix64(k ^ static_cast<std::uint64_t>(purpose));
    return detail::splitmix64(k ^ (index * 0xd1b54a32d192ed03ULL));
}

/// Satisfies UniformRandomBitGenerator; uniform() and normal() are implemented
/// here rather than through <random> distributions so that draws are identical
/// across standard libraries.
class RandomStream {
public:
    using result_type = std::uint64_t;

    RandomStream(std::uint64_t seed, StreamPurpose purpose, std::uint64_t index)
        : state_(stream_key(seed, purpose, index)) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Box-Muller; consumes two uniforms per call.
    double normal(double mean, double stddev) {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return mean + stddev * r * std::cos(2.0 * std::numbers::pi * u2);
    }

    /// Uniform integer in [0, bound) by rejection.
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t limit = max() - max() % bound;
        std::uint64_t v;
        do {
            v = (*this)();
        } while (v >= limit);
        return v % bound;
    }

private:
    std::uint64_t state_;
};

}  // namespace sbbm
