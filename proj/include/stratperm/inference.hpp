// Stratified permutation tests for the two-sample statistic sum_i z_{pi(i)} r_i
// under a sharp null, plus instrumental-variable tests (scores y - beta0 d) and
// confidence intervals by grid inversion.
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "stratperm/bounds.hpp"
#include "stratperm/oracle.hpp"
#include "stratperm/rng.hpp"

namespace stratperm {

enum class Alternative { greater, less, two_sided };
enum class TestMethod { exact, monte_carlo, normal_approx };

struct TestResult {
    double observed = 0.0;
    double p_value = 1.0;
    Alternative alternative = Alternative::two_sided;
    TestMethod method = TestMethod::exact;
    std::int64_t reps = 0;   // Monte Carlo draws; 0 for exact / normal_approx
    bool degenerate = false; // point-mass reference; p := 1

    // Tail tallies behind the p-value, exact rationals over `denominator`
    // (distinct assignments for exact, 1 + reps incl. the observed for MC).
    std::uint64_t count_greater_eq = 0;
    std::uint64_t count_less_eq = 0;
    std::uint64_t denominator = 0;

    // Product-form normal-approximation rate: always present for
    // normal_approx, attached to exact/MC results on desk-scale instances.
    std::optional<BoundReport> rate_report;
};

// Reference law: Z_pi^T R over uniform stratum-preserving pi, i.e. each
// stratum re-picks which positions are treated, keeping the counts z fixes.
// Ties with the observed value count as >= / <= (inclusive); a degenerate
// reference gives p = 1 with the flag set instead of an error.
TestResult permutation_test(std::span<const int> z, std::span<const double> r,
                            const StratumLayout& layout, Alternative alternative,
                            TestMethod method, std::int64_t reps, const RandomSource& rng,
                            int workers = 1,
                            std::uint64_t budget = kDefaultEnumerationBudget);

// Sharp-null test of effect beta0 in the linear model: adjusted scores
// r = y - beta0 * d are fixed under the null and delegated to permutation_test.
TestResult iv_test(std::span<const double> y, std::span<const double> d,
                   std::span<const int> z, const StratumLayout& layout, double beta0,
                   Alternative alternative, TestMethod method, std::int64_t reps,
                   const RandomSource& rng, int workers = 1,
                   std::uint64_t budget = kDefaultEnumerationBudget);

struct IvInterval {
    double alpha = 0.0;
    std::vector<double> grid;
    std::vector<double> p_values;  // two-sided p at each grid point
    double lo = 0.0, hi = 0.0;     // smallest interval covering accepted points
    bool empty = true;             // no grid point accepted (reported, not fatal)
    bool nonconvex = false;        // accepted points are not contiguous
};

// Accepts {beta0 : two-sided p(beta0) > alpha}; each grid point gets its own
// RNG substream so the interval is independent of grid chunking.
IvInterval iv_confidence_interval(std::span<const double> y, std::span<const double> d,
                                  std::span<const int> z, const StratumLayout& layout,
                                  double alpha, std::span<const double> beta_grid,
                                  TestMethod method, std::int64_t reps,
                                  const RandomSource& rng, int workers = 1,
                                  std::uint64_t budget = kDefaultEnumerationBudget);

} // namespace stratperm
