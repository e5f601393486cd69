#pragma once

#include <cstdint>

namespace vad {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Counter-based child seed: independent streams from one root seed, e.g.
/// one per clip so results do not depend on batching or thread layout.
constexpr std::uint64_t derive_seed(std::uint64_t root, std::uint64_t counter) {
    return mix64(mix64(root) ^ mix64(counter + 0x632be59bd9b4e019ULL));
}

}  // namespace vad
