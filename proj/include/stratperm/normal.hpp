// Standard-normal utilities and the exact distances between a discrete
// distribution (sorted atoms with cumulative probabilities) and N(0,1).
// Shared by the Monte Carlo engine (ECDF: atom i has cumulative i/m) and the
// enumeration oracle (exact atom probabilities).
#pragma once

#include <span>

namespace stratperm {

double normal_cdf(double x);       // Phi, via erfc for tail accuracy
double normal_sf(double x);        // 1 - Phi without upper-tail cancellation
double normal_pdf(double x);       // phi
double normal_quantile(double p);  // Phi^{-1}, p in (0,1)

// sup_x |F(x) - Phi(x)| for the step CDF F with jumps at `values` (ascending)
// reaching `cum[i]` just after values[i]. cum.back() must be 1.
double kolmogorov_to_std_normal(std::span<const double> values, std::span<const double> cum);

// Integral of |F - Phi| over the line, evaluated segment-by-segment with the
// closed-form antiderivative  int Phi = t Phi(t) + phi(t); the only numerics
// beyond that is locating the crossing Phi^{-1}(c) inside a segment.
double wasserstein_to_std_normal(std::span<const double> values, std::span<const double> cum);

} // namespace stratperm
