#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

#include "mloz/digest.hpp"

namespace mloz {

// All randomness in the toolkit is derived from one config seed through named
// substreams, and the per-day noise draws are counter-based: a draw depends
// only on (substream, counter indices), never on evaluation order. That is
// what makes runs bit-reproducible regardless of threading or mode.

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline std::uint64_t substream_seed(std::uint64_t seed, std::string_view name) {
    std::uint64_t h = fnv1a64(name, kFnvOffsetBasis ^ seed);
    std::uint64_t s = h;
    splitmix64(s);
    return splitmix64(s);
}

// Stateless mix of a substream seed with up to two counters.
inline std::uint64_t counter_mix(std::uint64_t stream, std::uint64_t a, std::uint64_t b = 0) {
    std::uint64_t s = stream ^ (a * 0xD6E8FEB86659FD93ull) ^ (b * 0xA5CB3B1F3C1F8Dull);
    splitmix64(s);
    splitmix64(s);
    return splitmix64(s);
}

// Uniform in [0, 1) from the top 53 bits; fully specified, no library
// distribution involved.
inline double u64_to_unit(std::uint64_t u) {
    return static_cast<double>(u >> 11) * 0x1.0p-53;
}

// Standard normal via Box-Muller; u1 is pushed into (0, 1] so the log is safe.
inline double normal_from_bits(std::uint64_t bits1, std::uint64_t bits2) {
    double u1 = 1.0 - u64_to_unit(bits1);
    double u2 = u64_to_unit(bits2);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

inline double counter_normal(std::uint64_t stream, std::uint64_t a, std::uint64_t b = 0) {
    return normal_from_bits(counter_mix(stream, 2 * a, 2 * b), counter_mix(stream, 2 * a + 1, 2 * b + 1));
}

inline double counter_uniform(std::uint64_t stream, std::uint64_t a, std::uint64_t b = 0) {
    return u64_to_unit(counter_mix(stream, a, b));
}

// Sequential generator for data synthesis (tests, benchmarks).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}
    Rng(std::uint64_t seed, std::string_view substream) : state_(substream_seed(seed, substream)) {}

    std::uint64_t next_u64() { return splitmix64(state_); }
    double uniform() { return u64_to_unit(next_u64()); }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal() {
        std::uint64_t a = next_u64();
        std::uint64_t b = next_u64();
        return normal_from_bits(a, b);
    }
    // Integer in [0, n), by rejection so the result is exactly uniform.
    std::uint64_t below(std::uint64_t n) {
        std::uint64_t limit = ~0ull - (~0ull % n);
        std::uint64_t u = next_u64();
        while (u >= limit) {
            u = next_u64();
        }
        return u % n;
    }

private:
    std::uint64_t state_;
};

}  // namespace mloz
