#pragma once

#include <cstdint>
#include <random>

namespace twrsim {

// splitmix64 (Vigna's public-domain mixer). Used only to derive engine
// seeds; the simulation engine itself is std::mt19937_64.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Derives an independent engine for (seed, stream). Every consumer that
// must stay decoupled from another (channel draws vs. packet arrivals,
// replication k vs. replication k+1) owns its own stream index, so adding
// or removing draws on one stream never perturbs another.
inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t state = seed ^ (0x6a09e667f3bcc909ULL + stream * 0x3c6ef372fe94f82bULL);
    const std::uint32_t w0 = static_cast<std::uint32_t>(splitmix64_next(state));
    const std::uint32_t w1 = static_cast<std::uint32_t>(splitmix64_next(state));
    const std::uint32_t w2 = static_cast<std::uint32_t>(splitmix64_next(state));
    const std::uint32_t w3 = static_cast<std::uint32_t>(splitmix64_next(state));
    std::seed_seq seq{w0, w1, w2, w3};
    return std::mt19937_64(seq);
}

// Fixed stream indices used across the simulator.
inline constexpr std::uint64_t kChannelStream = 0;
inline constexpr std::uint64_t kArrivalsSource0 = 1;
inline constexpr std::uint64_t kArrivalsSource2 = 2;
inline constexpr std::uint64_t kCapacityStream = 3;

}  // namespace twrsim
