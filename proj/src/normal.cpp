#include "stratperm/normal.hpp"

#include <cmath>

#include "stratperm/errors.hpp"
#include "stratperm/moments.hpp"

namespace stratperm {

namespace {
constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;
} // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

double normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double normal_sf(double x) { return 0.5 * std::erfc(x * kInvSqrt2); }

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw DomainError("normal_quantile needs p in (0,1)");
    // Acklam's rational approximation, then two Newton polish steps.
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    double x;
    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        const double q = p - 0.5, r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    for (int it = 0; it < 2; ++it) {
        const double err = normal_cdf(x) - p;
        const double dens = normal_pdf(x);
        if (dens <= 0.0) break;
        x -= err / dens;
    }
    return x;
}

namespace {

void check_steps(std::span<const double> values, std::span<const double> cum) {
    if (values.empty() || values.size() != cum.size())
        throw DomainError("step CDF needs matching non-empty values/cumulative arrays");
    if (std::abs(cum.back() - 1.0) > 1e-9)
        throw DomainError("cumulative probabilities must end at 1");
}

// Antiderivative of Phi.
double big_g(double t) { return t * normal_cdf(t) + normal_pdf(t); }

// int_a^b |c - Phi(t)| dt for a flat CDF level c on [a, b].
double flat_segment(double c, double a, double b) {
    if (b <= a) return 0.0;
    const double pa = normal_cdf(a), pb = normal_cdf(b);
    if (c <= pa) return (big_g(b) - big_g(a)) - c * (b - a);
    if (c >= pb) return c * (b - a) - (big_g(b) - big_g(a));
    const double t = normal_quantile(c);
    return (c * (t - a) - (big_g(t) - big_g(a))) + ((big_g(b) - big_g(t)) - c * (b - t));
}

} // namespace

double kolmogorov_to_std_normal(std::span<const double> values, std::span<const double> cum) {
    check_steps(values, cum);
    double d = 0.0, before = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double p = normal_cdf(values[i]);
        d = std::max({d, std::abs(cum[i] - p), std::abs(before - p)});
        before = cum[i];
    }
    return d;
}

double wasserstein_to_std_normal(std::span<const double> values, std::span<const double> cum) {
    check_steps(values, cum);
    NeumaierSum total;
    // Left tail, F = 0:  int_{-inf}^{x_0} Phi = G(x_0).
    total.add(big_g(values.front()));
    for (std::size_t i = 0; i + 1 < values.size(); ++i)
        total.add(flat_segment(cum[i], values[i], values[i + 1]));
    // Right tail, F = 1:  int_b^inf (1 - Phi) = phi(b) - b (1 - Phi(b)).
    const double b = values.back();
    total.add(normal_pdf(b) - b * normal_sf(b));
    return total.value();
}

} // namespace stratperm
