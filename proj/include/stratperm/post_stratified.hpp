// Post-stratified designs: a single global draw (simple random sample of
// size n1, or completely randomized assignment of n1 treated units) is taken
// without regard to a discrete covariate, then analyzed as if stratified on
// that covariate, conditional on every stratum being usable. Conditional on
// the realized per-stratum counts U the estimator follows the corresponding
// stratified law with sizes U and weights n_k/n, so its conditional sampling
// distribution is a mixture over U of stratified designs.
#pragma once

#include <cstdint>
#include <vector>

#include "stratperm/designs.hpp"
#include "stratperm/rng.hpp"

namespace stratperm {

struct PostStratSpec {
    DesignKind kind = DesignKind::sampling;
    std::vector<int> covariate; // level in [0, K) per unit; every level present
    int draw_size = 0;          // n1: units sampled, or treated total
};

struct PostStratPopulation {
    std::vector<double> y;  // outcomes; treated potential outcomes for experiments
    std::vector<double> y0; // control potential outcomes (experiments only)
};

// Population regrouped by covariate level. `order[p]` is the original unit
// index occupying grouped position p; outcomes are stored in grouped order
// and weights are the fixed n_k/n of post-stratification.
struct PostStratFrame {
    StratumLayout layout;
    std::vector<int> order;
    std::vector<double> y, y0;
    std::vector<double> weights;
};

PostStratFrame group_population(const PostStratSpec& spec, const PostStratPopulation& pop);

// The stratified design the estimator follows conditional on realized counts
// u (one per covariate level). Sampling: u_k >= 1; experiment: both arms.
SamplingDesign conditional_sampling_design(const PostStratFrame& frame,
                                           const std::vector<int>& u);
ExperimentDesign conditional_experiment_design(const PostStratFrame& frame,
                                               const std::vector<int>& u);

struct PostStratReport {
    DesignKind kind = DesignKind::sampling;
    std::int64_t requested = 0;
    std::int64_t accepted = 0;
    std::int64_t attempted = 0;      // global draws, including rejected ones
    double acceptance_rate = 0.0;    // accepted / attempted; estimates P(event)
    double sigma2 = 0.0;             // E[sigma^2(U) | event]; the conditional variance
    double estimate_mean = 0.0;      // conditionally unbiased: ~ gamma (resp. tau)
    double estimate_variance = 0.0;  // sample variance of estimates; ~ sigma2

    // First-term rate plug-ins, reported raw (constants unknown):
    // sampling     plug_in[k] = E[n_k1^{-2} sigma^{-3}(U) | event]
    // experiment   plug_in_treated[k] = E[n_k1^{-2} | event],
    //              plug_in_control[k] = E[n_k0^{-2} | event]
    std::vector<double> plug_in;
    std::vector<double> plug_in_treated;
    std::vector<double> plug_in_control;
    // sampling     sum_k w_k^3 M^3_k(Y) plug_in[k]
    // experiment   sigma^{-3} sum_k w_k^3 {M^3_k(Y1) plug_in_treated[k]
    //                                      + M^3_k(Y0) plug_in_control[k]}
    double rate_first_term = 0.0;

    // sup_t |E{Phi(sigma t / sigma(U)) | event} - Phi(t)|: the distance
    // between the normal mixture across accepted U and a single normal.
    double mixture_discrepancy = 0.0;

    // Sampling-fraction diagnostic (not enforced):
    // sampling     0 < n1/n < min_k S_k / max_k S_k
    // experiment   (min S_k1/max S_k1) S_1^2/p + (min S_k0/max S_k0) S_0^2/(1-p) > S_tau^2
    bool p_condition_ok = false;
};

inline constexpr std::int64_t kDefaultRetryCap = 1'000'000;

// Rejection-samples the global draw until the conditioning event holds (all
// strata hit; for experiments, both arms in every stratum), `reps` times.
// Throws EventUnreachable if the event is structurally impossible or no draw
// is accepted within the cap, BudgetExceeded if the cap lands mid-run.
// Degenerate populations (sigma2 = 0) yield IEEE infinities in the rate
// plug-ins and a zero mixture discrepancy.
PostStratReport simulate_post_stratified(const PostStratSpec& spec,
                                         const PostStratPopulation& pop,
                                         std::int64_t reps, const RandomSource& rng,
                                         std::int64_t retry_cap = kDefaultRetryCap);

} // namespace stratperm
