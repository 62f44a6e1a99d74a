#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace kge {

// SplitMix64 finalizer. Bijective 64-bit mix with full avalanche.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Derives an independent stream seed from a base seed and a key. Used to give
// every positive triple, epoch and subsystem its own substream so results do
// not depend on batch boundaries or worker count.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t key) {
    return mix64(seed ^ mix64(key ^ 0xD6E8FEB86659FD93ULL));
}

// Deterministic counter-style generator over the SplitMix64 sequence.
// Self-contained so that draws are bit-identical across platforms and
// standard library versions.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() { return mix64(state_++); }

    // Uniform in [0, 1) with 53 bits of precision.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Unbiased uniform integer in [0, n). n must be >= 1.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t threshold = (~n + 1) % n;  // 2^64 mod n
        std::uint64_t r = next_u64();
        while (r < threshold) r = next_u64();
        return r % n;
    }

    double in_range(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    bool coin() { return (next_u64() >> 63) != 0; }

private:
    std::uint64_t state_;
};

// Fisher-Yates with our own bounded draw; std::shuffle's draw sequence is
// implementation-defined.
template <class T>
void shuffle(std::vector<T>& items, Rng& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.below(i));
        std::swap(items[i - 1], items[j]);
    }
}

}  // namespace kge
