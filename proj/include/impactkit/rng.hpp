#pragma once

#include <cstdint>
#include <vector>

namespace impactkit {

/// Deterministic 64-bit generator (splitmix64). Used wherever the toolkit
/// promises seed-reproducible output: dataset shuffles, stratified sampling,
/// and parameter initialization. Unlike std::shuffle /
/// std::uniform_*_distribution, the stream is identical across standard
/// library implementations, so files written on one platform match another.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform integer in [0, bound) via rejection sampling (unbiased).
    std::uint64_t next_below(std::uint64_t bound) {
        if (bound <= 1) return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t x;
        do {
            x = next();
        } while (x >= limit);
        return x % bound;
    }

    /// Uniform double in [0, 1) with 53 bits of randomness.
    double next_double() { return double(next() >> 11) * 0x1.0p-53; }

    /// Uniform double in [-scale, scale).
    double next_symmetric(double scale) {
        return (2.0 * next_double() - 1.0) * scale;
    }

private:
    std::uint64_t state_;
};

/// In-place Fisher-Yates shuffle driven by SplitMix64.
template <typename T>
void deterministic_shuffle(std::vector<T>& items, SplitMix64& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.next_below(i));
        using std::swap;
        swap(items[i - 1], items[j]);
    }
}

}  // namespace impactkit
