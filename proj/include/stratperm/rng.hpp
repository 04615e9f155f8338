// Reproducible randomness. Every draw path is pinned down by the C++ standard
// (mt19937_64 sequence, our own rejection/bit manipulation on top), so a seed
// produces the same stream on every platform. Sub-streams are derived from the
// root seed with a SplitMix64 mix and are what makes worker-count-independent
// parallel simulation possible.
#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace stratperm {

inline constexpr std::uint64_t kDefaultSeed = 0xDEC0DE;

class RandomSource {
public:
    explicit RandomSource(std::uint64_t seed = kDefaultSeed);

    std::uint64_t seed() const { return seed_; }
    // Child stream `index` of this source's seed. Pure function of
    // (seed, index); does not advance or depend on this stream's position.
    RandomSource substream(std::uint64_t index) const;

    std::uint64_t next_u64() { return engine_(); }
    // Uniform on {0, ..., bound-1} by rejection; no modulo bias.
    std::uint64_t uniform_below(std::uint64_t bound);
    // Uniform on [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
    // Standard normal (Box-Muller, cosine branch; one value per two uniforms).
    double normal();
    // Index draw from unnormalized non-negative weights (linear CDF walk;
    // meant for small supports like stratum selection).
    int categorical(std::span<const double> weights);

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

// Vose's alias method: O(n) setup, O(1) sampling. Used for the four-index
// coupling draw whose support is the n_k^4 grid.
class AliasTable {
public:
    explicit AliasTable(std::span<const double> weights); // non-negative, positive sum
    std::size_t size() const { return prob_.size(); }
    std::size_t sample(RandomSource& rng) const;

private:
    std::vector<double> prob_;
    std::vector<std::uint32_t> alias_;
};

} // namespace stratperm
