#pragma once

#include <cstdint>
#include <string_view>

namespace axdram {

// Seed derivation: every random stream in the library is keyed by
//   derive_seed(master, tag, index) = splitmix64(master ^ fnv1a64(tag) ^ splitmix64(index))
// so that adding a new stage (a new tag) never perturbs existing streams.

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view text) noexcept {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (char c : text) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    return h;
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                                    std::uint64_t index = 0) noexcept {
    return splitmix64(master ^ fnv1a64(tag) ^ splitmix64(index));
}

/// Uniform double in [0, 1) from the top 53 bits of a 64-bit word.
constexpr double to_unit(std::uint64_t bits) noexcept {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Counter-based uniform: a pure function of (key, counter).
constexpr double hashed_uniform(std::uint64_t key, std::uint64_t counter) noexcept {
    return to_unit(splitmix64(key ^ splitmix64(counter + 0x632BE59BD9B4E019ULL)));
}

}  // namespace axdram
