// Design-based estimators as stratified permutation statistics: stratified
// sampling (estimate a weighted population mean from per-stratum simple
// random samples) and stratified randomized experiments (weighted average
// treatment effect under complete randomization within strata). Each design
// compiles to a score matrix whose permutation distribution is exactly the
// randomization distribution of the estimator.
#pragma once

#include <span>
#include <vector>

#include "stratperm/bounds.hpp"
#include "stratperm/matrix.hpp"

namespace stratperm {

enum class DesignKind { sampling, experiment };

struct SamplingDesign {
    StratumLayout layout;
    std::vector<double> y;        // outcome per unit, stratum-contiguous order
    std::vector<int> sample_size; // n_k1 per stratum, 1 <= n_k1 <= n_k
    std::vector<double> weights;  // w_k > 0; empty means n_k / n
};

struct ExperimentDesign {
    StratumLayout layout;
    std::vector<double> y1, y0;   // potential outcomes per unit
    std::vector<int> treated;     // n_k1 per stratum, 1 <= n_k1 <= n_k - 1
    std::vector<double> weights;  // w_k > 0; empty means n_k / n
};

// Effective weights (the n_k/n default resolved).
std::vector<double> design_weights(const SamplingDesign& d);
std::vector<double> design_weights(const ExperimentDesign& d);

// Block k row i: w_k Y_i / n_k1 in the first n_k1 columns, 0 elsewhere —
// "position j is sampled" iff j is one of the first n_k1 slots.
StratifiedMatrix build_design_matrix(const SamplingDesign& d);
// Block k row i: w_k Y_i(1)/n_k1 in the first n_k1 columns and
// -w_k Y_i(0)/n_k0 in the rest.
StratifiedMatrix build_design_matrix(const ExperimentDesign& d);

// Closed-form randomization variances (valid for arbitrary positive weights):
//   sampling   sum_k w_k^2 (1/n_k1 - 1/n_k) S_k^2
//   experiment sum_k w_k^2 (S_k1^2/n_k1 + S_k0^2/n_k0 - S_ktau^2/n_k)
// Identical to the compiled matrix's permutation variance.
double design_variance(const SamplingDesign& d);
double design_variance(const ExperimentDesign& d);

// Plug a realized assignment in: z_i = 1 means sampled (resp. treated).
// Per-stratum counts must match the design (CountMismatch).
double estimate(const SamplingDesign& d, std::span<const int> z);
double estimate(const ExperimentDesign& d, std::span<const int> z);

// Normal-approximation rate for the standardized estimator:
//   sampling   sigma^-3 sum_k w_k^3 M^3_k(Y) / n_k1^2
//   experiment sigma^-3 sum_k w_k^3 {M^3_k(Y1)/n_k1^2 + M^3_k(Y0)/n_k0^2}
// equal to the columnwise rate of the compiled matrix; branch logic as in
// the main theorem, with theta computed on that matrix.
BoundReport rate_design(const SamplingDesign& d);
BoundReport rate_design(const ExperimentDesign& d);

} // namespace stratperm
