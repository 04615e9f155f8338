// Rate-quantity evaluators for the normal approximation of W_{A,pi}.
//
// Only the Wasserstein bound carries an explicit certified constant (160 x
// third-moment rate). Everything else reports the raw rate quantity together
// with both exponent branches: the general branch rate^{1/2} and, when the
// stratum sizes and the theta diagnostic allow it, the classic branch rate^1.
// No winner is picked; exponent_delta records which branch convenience_bound
// used (the classic one whenever it is available).
#pragma once

#include <optional>
#include <span>
#include <string>

#include "stratperm/matrix.hpp"

namespace stratperm {

// Regime diagnostic f(n, r2); decreasing in r2, increasing in n, defined for
// integer n >= 6 and r2 in [0, 1]. f(n, 0) = 1/2.
double f_value(int n, double r2);

// theta = min_k f(n_k, R^2_{A'[k]}) where A' is the truncated standardized
// matrix and R^2 its per-stratum variance shares. Requires every n_k >= 6.
double theta(const StratifiedMatrix& a);

enum class RateMethod {
    theorem1,            // sum_k beta_k / n_k, both branches
    independent,         // sum_k n_k beta_k, classic branch only (no theta)
    wasserstein_combine, // sum_k beta_k / (n_k R^2_k), general branch only
    columnwise,          // sum_k sum |a^{0c}|^3 / (sigma^3 n_k), both branches
};

struct BoundReport {
    std::string method;
    double rate_quantity = 0.0;
    double exponent_delta = 0.5;          // exponent of the reported branch
    std::optional<double> theta;          // only when the method uses it and all n_k >= 6
    std::string regime;                   // "classic" (delta = 1) or "general"
    std::string constant_mode;            // "reported_raw" or "explicit"
    std::optional<double> certified_bound;   // only for explicit mode
    double constant_override = 1.0;
    std::optional<double> branch_classic;    // rate^1 when that branch is valid
    std::optional<double> branch_general;    // rate^{1/2} when that branch exists
    double convenience_bound = 0.0;          // constant_override * rate^delta (uncertified)
};

// Standardizes internally (DegenerateVariance if sigma = 0).
BoundReport rate(const StratifiedMatrix& a, RateMethod method, double constant_override = 1.0);

// Certified d_W <= 160 * sum_k beta_k / n_k.
BoundReport wasserstein_bound(const StratifiedMatrix& a);

// d_K <= (2/pi)^{1/4} sqrt(d_W); monotone conversion of a certified
// Wasserstein bound into a Kolmogorov one.
double kolmogorov_from_wasserstein(double wasserstein);

// Product-form rate for the two-sample statistic sum_i z_{pi(i)} r_i:
// sigma^{-3} sum_k n_k M^3_k(z) M^3_k(r), with theorem-1 branch logic applied
// to the compiled outer-product matrix (z_i - zbar_k)(r_j - rbar_k).
BoundReport rate_product(std::span<const double> z, std::span<const double> r,
                         const StratumLayout& layout, double constant_override = 1.0);

// Assemble a report around a rate quantity computed elsewhere (design
// compilations, linear combinations of a multivariate statistic). Branch
// logic as in `rate`: theta is evaluated on `a` after standardizing, and the
// classic branch applies iff every n_k >= 6 and theta > 0.
BoundReport assemble_rate_report(const StratifiedMatrix& a, std::string method,
                                 double rate_quantity, double constant_override = 1.0);

} // namespace stratperm
