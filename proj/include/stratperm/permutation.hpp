// Stratum-preserving permutations, uniform sampling, the statistic value,
// and the random-transposition (Stein pair) draw.
#pragma once

#include <cstdint>
#include <vector>

#include "stratperm/matrix.hpp"
#include "stratperm/rng.hpp"

namespace stratperm {

struct StratifiedPermutation {
    StratumLayout layout;
    std::vector<std::int32_t> images; // pi(i), global indices; stratum-preserving

    bool operator==(const StratifiedPermutation& o) const { return images == o.images; }
};

StratifiedPermutation identity_permutation(const StratumLayout& layout);

// Uniform over the product of per-stratum symmetric groups (Fisher-Yates
// within each stratum).
StratifiedPermutation sample_permutation(const StratumLayout& layout, RandomSource& rng);
// In-place variant for hot loops; resets to identity first.
void sample_permutation_into(StratifiedPermutation& pi, RandomSource& rng);

// W_{A,pi} = sum_i a_{i, pi(i)}.
double statistic(const StratifiedMatrix& a, const StratifiedPermutation& pi);

// One step of the exchangeable pair: pick stratum B with probability
// (n_B - 1)/(n - K), two distinct indices I != J inside it, and return
// pi'' = pi o tau_IJ. Requires n > K (some stratum must admit a swap).
struct SteinPairDraw {
    int stratum = -1;
    int i = -1, j = -1;                  // global indices, i != j
    StratifiedPermutation pi_transposed; // pi''
};

SteinPairDraw stein_pair_draw(const StratifiedMatrix& a, const StratifiedPermutation& pi,
                              RandomSource& rng);

} // namespace stratperm
