// Vector-valued stratified permutation statistics: H component matrices over
// one layout, the stratified inner product that is their covariance when
// centered, joint standardization via the symmetric inverse square root of
// the Gram matrix, and rate evaluators for linear combinations and for the
// convex-set (multivariate) normal approximation.
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "stratperm/bounds.hpp"
#include "stratperm/matrix.hpp"

namespace stratperm {

struct MultiStatistic {
    StratumLayout layout;
    std::vector<StratifiedMatrix> components;
};

// Validates H >= 1 and a shared layout (LayoutMismatch otherwise).
MultiStatistic make_multi_statistic(std::vector<StratifiedMatrix> components);

// <g, h>_K = sum_k (n_k - 1)^{-1} sum_ij g_ij h_ij; singleton strata
// contribute 0. Equals cov(W_g, W_h) when both matrices are centered; the
// raw formula is computed regardless.
double inner_product_K(const StratifiedMatrix& g, const StratifiedMatrix& h);

// Centers every component and mixes them with V^{-1/2} (symmetric inverse
// square root of the Gram matrix under <.,.>_K), so the output satisfies
// mean zero, <G_h, G_h>_K = 1 and <G_h, G_l>_K = 0 for h != l.
// SingularCovariance when min eigenvalue <= 1e-10 * max eigenvalue.
MultiStatistic standardize_multi(const MultiStatistic& m);

// Rate for the scalar projection sum_h b_h W_h of a standardized statistic:
// the largest entry magnitude max_k max_ij |sum_h b_h g_{h,ij}|, with branch
// logic run on the combination matrix. Requires ||b|| = 1 within 1e-12 and
// components already standardized within 1e-8 (NotStandardized otherwise).
BoundReport rate_linear_combination(const MultiStatistic& m, std::span<const double> b);

// Four-term rate for the normal approximation over all Borel convex sets,
// with every unknown constant taken as 1: for B = b_n,
//   H^{13/4} B (n B^2 + K) + H^{3/4} B
//   + H^{13/8} (n-K)^{1/4} B^{3/2} + H^{11/8} (n-K)^{1/2} B^2.
// Requires n > k_strata >= 1, h_dim >= 1, b_n >= 0.
double rate_convex_sets(int h_dim, double b_n, std::int64_t n, int k_strata);

} // namespace stratperm
