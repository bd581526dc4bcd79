#pragma once

#include <cstdint>
#include <random>

namespace cdet {

/// One mixing round of SplitMix64. Advances `state` and returns a
/// well-scrambled 64-bit value.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Derives an independent child seed from a base seed and a stream index.
/// Distinct (base, stream) pairs yield statistically unrelated generators,
/// so parallel trials can own their streams without sharing state.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    std::uint64_t state = base;
    std::uint64_t mixed = splitmix64(state);
    state = mixed ^ (stream + 0x9e3779b97f4a7c15ULL);
    return splitmix64(state);
}

inline std::mt19937_64 make_rng(std::uint64_t seed) {
    return std::mt19937_64(seed);
}

}  // namespace cdet
