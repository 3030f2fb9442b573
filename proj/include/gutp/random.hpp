#pragma once

// Counter-based stream derivation. Every noise draw is tied to
// (master_seed, trial_index, anchor_index), so the order in which worker
// threads run trials cannot change any number.

#include <cstdint>
#include <random>

namespace gutp {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t stream_seed(std::uint64_t master_seed, std::uint64_t trial_index,
                                    std::uint64_t anchor_index) noexcept {
    std::uint64_t h = mix64(master_seed);
    h = mix64(h ^ mix64(trial_index ^ 0x5452494cULL));
    h = mix64(h ^ mix64(anchor_index ^ 0x414e4348ULL));
    return h;
}

using NoiseEngine = std::mt19937_64;

inline NoiseEngine make_stream(std::uint64_t master_seed, std::uint64_t trial_index,
                               std::uint64_t anchor_index) {
    return NoiseEngine(stream_seed(master_seed, trial_index, anchor_index));
}

}  // namespace gutp
