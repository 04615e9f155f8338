// Monte Carlo simulation of W_{A,pi} with a deterministic batch schedule:
// reps are split over a fixed 64 sub-streams regardless of worker count, so a
// summary is a pure function of (seed, reps) and re-runs are byte-identical
// no matter how many threads execute the batches.
#pragma once

#include <cstdint>
#include <vector>

#include "stratperm/matrix.hpp"
#include "stratperm/rng.hpp"

namespace stratperm {

struct SampleSummary {
    std::int64_t count = 0;
    double mean = 0.0;
    double variance = 0.0;      // sample variance, 1/(count-1)
    std::vector<double> draws;  // sorted ascending
};

SampleSummary simulate_statistic(const StratifiedMatrix& a, std::int64_t reps,
                                 const RandomSource& rng, int workers = 1);

// Distances between the empirical draw distribution and N(0,1).
double ecdf_kolmogorov_vs_normal(const SampleSummary& s);
double empirical_wasserstein_vs_normal(const SampleSummary& s);

// Monte Carlo error allowances used when an estimated distance is compared
// against a certified bound.
//   Kolmogorov: two-sided DKW band at confidence 1 - 0.0027.
//   Wasserstein: |dhat - d| <= integral |F_m - F|, whose mean and sd are both
//   at most (int sqrt(Phi(1-Phi)) dt)/sqrt(m) = 1.6147/sqrt(m); mean + 3 sd.
double kolmogorov_mc_allowance(std::int64_t m);
double wasserstein_mc_allowance(std::int64_t m);

} // namespace stratperm
