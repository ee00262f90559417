#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace docdate {

// Deterministic draw helpers on top of mt19937_64. The standard <random>
// distributions are implementation-defined, so every sampled value in this
// project goes through these instead.

// Uniform double in [0, 1), 53 bits of entropy.
inline double uniform_unit(std::mt19937_64& g) {
    return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n), n >= 1. Rejection sampling, no modulo bias.
inline std::uint64_t uniform_below(std::mt19937_64& g, std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
        const std::uint64_t r = g();
        if (r >= threshold) return r % n;
    }
}

inline long uniform_int(std::mt19937_64& g, long lo, long hi) {  // inclusive range
    return lo + static_cast<long>(uniform_below(g, static_cast<std::uint64_t>(hi - lo + 1)));
}

inline double uniform_range(std::mt19937_64& g, double lo, double hi) {
    return lo + (hi - lo) * uniform_unit(g);
}

template <typename T>
void shuffle_vec(std::vector<T>& v, std::mt19937_64& g) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(uniform_below(g, i));
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace docdate
