#include "stratperm/rng.hpp"

#include <cmath>
#include <numbers>

#include "stratperm/errors.hpp"
#include "stratperm/moments.hpp"

namespace stratperm {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

std::uint64_t splitmix64(std::uint64_t z) {
    z += kGolden;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

std::mt19937_64 make_engine(std::uint64_t seed) {
    // Expand the seed so nearby seeds don't share low-entropy states.
    std::uint64_t s = seed;
    std::seed_seq seq{splitmix64(s), splitmix64(s + 1), splitmix64(s + 2), splitmix64(s + 3)};
    return std::mt19937_64(seq);
}

} // namespace

RandomSource::RandomSource(std::uint64_t seed) : seed_(seed), engine_(make_engine(seed)) {}

RandomSource RandomSource::substream(std::uint64_t index) const {
    return RandomSource(splitmix64(seed_ + (index + 1) * kGolden));
}

std::uint64_t RandomSource::uniform_below(std::uint64_t bound) {
    if (bound == 0)
        throw DomainError("uniform_below needs a positive bound");
    const std::uint64_t threshold = (0 - bound) % bound; // 2^64 mod bound
    for (;;) {
        const std::uint64_t x = next_u64();
        if (x >= threshold) return x % bound;
    }
}

double RandomSource::normal() {
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log1p(-u1)); // log(1-u1), safe at u1=0
    return r * std::cos(2.0 * std::numbers::pi * u2);
}

int RandomSource::categorical(std::span<const double> weights) {
    NeumaierSum total;
    for (double w : weights) {
        if (w < 0.0) throw DomainError("categorical weights must be non-negative");
        total.add(w);
    }
    const double t = total.value();
    if (!(t > 0.0)) throw DomainError("categorical weights must have positive sum");
    const double u = uniform01() * t;
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        if (u < acc) return static_cast<int>(i);
    }
    // Round-off straggler: return the last positive-weight index.
    for (std::size_t i = weights.size(); i-- > 0;)
        if (weights[i] > 0.0) return static_cast<int>(i);
    return static_cast<int>(weights.size()) - 1;
}

AliasTable::AliasTable(std::span<const double> weights) {
    const std::size_t n = weights.size();
    if (n == 0) throw DomainError("alias table needs at least one weight");
    NeumaierSum sum;
    for (double w : weights) {
        if (!(w >= 0.0)) throw DomainError("alias weights must be non-negative and finite");
        sum.add(w);
    }
    const double total = sum.value();
    if (!(total > 0.0)) throw DomainError("alias weights must have positive sum");

    prob_.assign(n, 0.0);
    alias_.assign(n, 0);
    std::vector<double> scaled(n);
    for (std::size_t i = 0; i < n; ++i) scaled[i] = weights[i] * n / total;

    std::vector<std::uint32_t> small, large;
    small.reserve(n);
    large.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));

    while (!small.empty() && !large.empty()) {
        const std::uint32_t s = small.back();
        small.pop_back();
        const std::uint32_t l = large.back();
        prob_[s] = scaled[s];
        alias_[s] = l;
        scaled[l] = (scaled[l] + scaled[s]) - 1.0;
        if (scaled[l] < 1.0) {
            large.pop_back();
            small.push_back(l);
        }
    }
    for (std::uint32_t i : large) prob_[i] = 1.0;
    for (std::uint32_t i : small) prob_[i] = 1.0; // numerical leftovers
}

std::size_t AliasTable::sample(RandomSource& rng) const {
    const std::size_t i = static_cast<std::size_t>(rng.uniform_below(prob_.size()));
    return rng.uniform01() < prob_[i] ? i : alias_[i];
}

} // namespace stratperm
