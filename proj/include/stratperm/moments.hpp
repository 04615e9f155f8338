// Exact first and second moments of W_{A,pi} under the stratified uniform
// permutation law, plus the finite-population absolute moments M^r.
#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "stratperm/matrix.hpp"

namespace stratperm {

struct MomentReport {
    double mean = 0.0;
    double variance = 0.0;
    // Per-stratum contribution (n_k - 1)^{-1} sum (a0_ij)^2; zero for n_k = 1.
    std::vector<double> stratum_variance;
    // The remaining fields need a positive variance; empty/absent otherwise.
    std::vector<double> variance_share;           // R^2_[k], sums to 1
    std::vector<double> beta;                     // sum |a^s_ij|^3 per stratum
    std::optional<double> third_moment_rate;      // sum_k beta_k / n_k
};

MomentReport moments(const StratifiedMatrix& a);

// Same variance through the expanded identity
//   sum (a - rbar_i - cbar_j + gbar)^2 = sum a^2 - n sum rbar^2 - n sum cbar^2 + n^2 gbar^2.
// Cancellation-prone; exists so tests can confirm the two forms agree.
double variance_expanded_form(const StratifiedMatrix& a);

// M^r(y) = mean of |y_i - ybar|^r. Requires r > 0 and a non-empty span.
double finite_pop_moment(std::span<const double> y, double r);

// Compensated (Neumaier) accumulator used wherever block-sized reductions run.
class NeumaierSum {
public:
    void add(double x) {
        double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

} // namespace stratperm
