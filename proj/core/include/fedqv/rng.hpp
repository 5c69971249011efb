#pragma once

#include <bit>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace fedqv {

// SplitMix64 step; used to derive independent seed streams from
// (experiment seed, party, round, ...) tuples so that results do not
// depend on scheduling or worker count.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts) {
    std::uint64_t h = 0x6a09e667f3bcc908ULL;
    for (std::uint64_t p : parts) h = splitmix64(h ^ p);
    return h;
}

inline std::uint64_t hash_bytes(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t double_bits(double v) { return std::bit_cast<std::uint64_t>(v); }

inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(splitmix64(seed)); }

inline std::mt19937_64 make_rng(std::initializer_list<std::uint64_t> parts) {
    return std::mt19937_64(derive_seed(parts));
}

} // namespace fedqv
