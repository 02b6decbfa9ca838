#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "upsd/errors.hpp"

namespace upsd {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Stream key for a (run seed, turn index) pair.
constexpr std::uint64_t shuffle_key(std::int64_t seed, std::int64_t turn_index) noexcept {
    return splitmix64(static_cast<std::uint64_t>(seed) ^
                      splitmix64(static_cast<std::uint64_t>(turn_index) + 0x5851F42D4C957F2DULL));
}

// Unbiased draw in [0, bound). mt19937_64's output sequence is fixed by the
// standard, so this (unlike std::uniform_int_distribution) is portable.
inline std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t bound) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t r = rng();
    while (r >= limit) r = rng();
    return r % bound;
}

/// Deterministic Fisher-Yates permutation keyed by (seed, turn_index).
template <typename T>
std::vector<T> shuffle_candidates(std::vector<T> items, std::int64_t seed, std::int64_t turn_index) {
    if (items.empty()) throw PreconditionViolation("shuffle_candidates needs a non-empty list");
    std::mt19937_64 rng(shuffle_key(seed, turn_index));
    for (std::size_t i = items.size() - 1; i > 0; --i) {
        const auto j = static_cast<std::size_t>(bounded_draw(rng, i + 1));
        std::swap(items[i], items[j]);
    }
    return items;
}

}  // namespace upsd
