// Brute-force enumeration over the stratified permutation group. The exact
// distribution carries integer counts over the denominator prod n_k!, so
// probability comparisons downstream are exact. Everything here is the slow,
// obviously-correct reference the fast paths are tested against.
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "stratperm/matrix.hpp"
#include "stratperm/permutation.hpp"

namespace stratperm {

inline constexpr std::uint64_t kDefaultEnumerationBudget = 10'000'000;

struct ExactDistribution {
    std::vector<double> values;        // ascending atoms
    std::vector<std::uint64_t> counts; // same length; sum == denominator
    std::uint64_t denominator = 0;

    double prob(std::size_t i) const {
        return static_cast<double>(counts[i]) / static_cast<double>(denominator);
    }
    double mean() const;
    double variance() const;
};

// prod n_k!, saturating at uint64 max.
std::uint64_t count_permutations(const StratumLayout& layout);

// Distribution of W_{A,pi}: per-stratum permutation values convolved across
// strata. Atoms closer than 1e-12 (scaled by the value magnitude) merge.
// BudgetExceeded when prod n_k! > budget.
ExactDistribution enumerate_distribution(const StratifiedMatrix& a,
                                         std::uint64_t budget = kDefaultEnumerationBudget);

enum class Distance { kolmogorov, wasserstein };

// Exact distance between an enumerated distribution and N(0,1).
double exact_distance(const ExactDistribution& dist, Distance which);

// Visits every stratified permutation (odometer over per-stratum
// lexicographic orders). BudgetExceeded when prod n_k! > budget.
void for_each_permutation(const StratumLayout& layout, std::uint64_t budget,
                          const std::function<void(const StratifiedPermutation&)>& fn);

struct CheckResult {
    std::string identity;
    double max_violation = 0.0;
    bool pass = false;
};

struct VerifyReport {
    std::vector<CheckResult> checks;
    std::uint64_t budget_used = 0;
    bool pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
};

// Exchangeable-pair checks on the standardized matrix (centered when the
// variance vanishes): E(W''|pi) = (1 - 2/(n-K)) W for every pi, exact joint
// exchangeability of (W, W'') by integer counts, and
// var(W - W'') = 4 sigma^2 / (n - K).
VerifyReport verify_stein_pair(const StratifiedMatrix& a, double linearity_tol = 1e-12,
                               double variance_tol = 1e-10,
                               std::uint64_t budget = kDefaultEnumerationBudget);

// The defining identity var(W) E f'(W*) = E[W f(W)] for f(x) = x^degree,
// evaluated by full enumeration of (pi, stratum, four indices) with the
// uniform-U integral done in closed form. Also rechecks that the four-index
// mass sums to one within each participating stratum.
VerifyReport verify_zero_bias(const StratifiedMatrix& a, int degree, double tol = 1e-8,
                              std::uint64_t budget = kDefaultEnumerationBudget);

// Structural claims about pi-dagger on every positive-mass coupling outcome:
// untouched positions keep their images, {pi-dagger(I), pi-dagger(J)} = {P,Q},
// the result is a bijection, and the remaining images are exactly uniform
// (integer counts all equal) over arrangements of the leftover targets.
VerifyReport verify_pi_dagger(const StratifiedMatrix& a,
                              std::uint64_t budget = kDefaultEnumerationBudget);

} // namespace stratperm
