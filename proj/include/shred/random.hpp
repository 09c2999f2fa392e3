#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace shred {

using Rng = std::mt19937_64;

/// 64-bit FNV-1a. Used instead of std::hash so derived seeds are stable
/// across standard library implementations.
constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

/// Seed for stochastic component `component` (e.g. "noise", "init") with
/// member index `index`, derived from the run's single master seed.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view component,
                                    std::uint64_t index = 0) noexcept {
    return splitmix64(splitmix64(master ^ fnv1a(component)) + index);
}

} // namespace shred
