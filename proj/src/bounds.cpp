#include "stratperm/bounds.hpp"

#include <cmath>
#include <string>

#include "stratperm/errors.hpp"
#include "stratperm/moments.hpp"

namespace stratperm {

double f_value(int n, double r2) {
    if (n < 6)
        throw DomainError("f is defined for stratum sizes >= 6");
    if (!(r2 >= 0.0 && r2 <= 1.0))
        throw DomainError("variance share must lie in [0, 1]");
    const double nn = n;
    const double d5 = (nn - 5.0) * (nn - 5.0);
    const double d4 = (nn - 4.0) * (nn - 4.0);
    return 0.5 - 24.0 * nn * r2 / d5 -
           4.0 * std::sqrt(1.0 + (28.0 * nn - 20.0) * r2 / d5) * std::sqrt(nn * r2 / d4);
}

double theta(const StratifiedMatrix& a) {
    const StratumLayout& L = a.layout();
    if (L.min_size() < 6)
        throw DomainError("theta needs every stratum size >= 6");
    const StratifiedMatrix trunc = transform(a, Transform::truncate);
    const MomentReport m = moments(trunc);
    if (!(m.variance > 0.0))
        throw DegenerateVariance("truncated matrix is degenerate; theta undefined");
    double t = f_value(L.size(0), m.variance_share[0]);
    for (int k = 1; k < L.num_strata(); ++k)
        t = std::min(t, f_value(L.size(k), m.variance_share[k]));
    return t;
}

namespace {

std::optional<double> try_theta(const StratifiedMatrix& a) {
    if (a.layout().min_size() < 6) return std::nullopt;
    try {
        return theta(a);
    } catch (const DegenerateVariance&) {
        return std::nullopt; // truncation wiped the matrix; only the general branch remains
    }
}

// Fill the branch/exponent fields once rate_quantity, theta and the method's
// branch availability are known.
void finish_report(BoundReport& rep, bool has_general, bool has_classic) {
    if (has_general) rep.branch_general = std::sqrt(rep.rate_quantity);
    if (has_classic) rep.branch_classic = rep.rate_quantity;
    rep.exponent_delta = has_classic ? 1.0 : 0.5;
    rep.regime = has_classic ? "classic" : "general";
    rep.constant_mode = "reported_raw";
    rep.convenience_bound =
        rep.constant_override * std::pow(rep.rate_quantity, rep.exponent_delta);
}

// Theorem-1 style branch logic shared by theorem1/columnwise and the product
// form: classic branch iff min n_k >= 6 and theta > 0.
void finish_theorem1_style(BoundReport& rep, const StratifiedMatrix& standardized) {
    rep.theta = try_theta(standardized);
    finish_report(rep, /*has_general=*/true,
                  /*has_classic=*/rep.theta.has_value() && *rep.theta > 0.0);
}

} // namespace

BoundReport rate(const StratifiedMatrix& a, RateMethod method, double constant_override) {
    const StratifiedMatrix as = transform(a, Transform::standardize);
    const MomentReport m = moments(as); // mean 0, variance 1 by construction
    const StratumLayout& L = a.layout();

    BoundReport rep;
    rep.constant_override = constant_override;

    switch (method) {
    case RateMethod::theorem1: {
        rep.method = "theorem1";
        rep.rate_quantity = *m.third_moment_rate;
        finish_theorem1_style(rep, as);
        return rep;
    }
    case RateMethod::independent: {
        rep.method = "independent";
        NeumaierSum r;
        for (int k = 0; k < L.num_strata(); ++k)
            r.add(static_cast<double>(L.size(k)) * m.beta[k]);
        rep.rate_quantity = r.value();
        finish_report(rep, /*has_general=*/false, /*has_classic=*/true);
        return rep;
    }
    case RateMethod::wasserstein_combine: {
        rep.method = "wasserstein_combine";
        NeumaierSum r;
        for (int k = 0; k < L.num_strata(); ++k) {
            if (!(m.variance_share[k] > 0.0))
                throw ZeroStratumRatio("stratum " + std::to_string(k) +
                                       " has zero variance share");
            r.add(m.beta[k] / (L.size(k) * m.variance_share[k]));
        }
        rep.rate_quantity = r.value();
        finish_report(rep, /*has_general=*/true, /*has_classic=*/false);
        return rep;
    }
    case RateMethod::columnwise: {
        rep.method = "columnwise";
        // sum_k sum_ij |a_ij - colmean_j|^3 / (sigma^3 n_k) on the raw matrix.
        const StratifiedMatrix ac = transform(a, Transform::column_center);
        const double var = moments(a).variance;
        if (!(var > 0.0))
            throw DegenerateVariance("statistic has zero variance");
        const double sigma3 = var * std::sqrt(var);
        NeumaierSum r;
        for (int k = 0; k < L.num_strata(); ++k) {
            NeumaierSum cube;
            for (double v : ac.block(k)) cube.add(std::abs(v) * v * v);
            r.add(cube.value() / (sigma3 * L.size(k)));
        }
        rep.rate_quantity = r.value();
        finish_theorem1_style(rep, as);
        return rep;
    }
    }
    throw DomainError("unknown rate method");
}

BoundReport wasserstein_bound(const StratifiedMatrix& a) {
    const StratifiedMatrix as = transform(a, Transform::standardize);
    const MomentReport m = moments(as);
    BoundReport rep;
    rep.method = "wasserstein";
    rep.rate_quantity = *m.third_moment_rate;
    rep.exponent_delta = 1.0;
    rep.regime = "classic";
    rep.constant_mode = "explicit";
    rep.certified_bound = 160.0 * rep.rate_quantity;
    rep.convenience_bound = *rep.certified_bound;
    return rep;
}

double kolmogorov_from_wasserstein(double wasserstein) {
    if (!(wasserstein >= 0.0))
        throw DomainError("Wasserstein bound must be non-negative");
    // (2/pi)^{1/4}
    constexpr double kQuarterRoot = 0.8932438417380023;
    return kQuarterRoot * std::sqrt(wasserstein);
}

BoundReport assemble_rate_report(const StratifiedMatrix& a, std::string method,
                                 double rate_quantity, double constant_override) {
    BoundReport rep;
    rep.method = std::move(method);
    rep.rate_quantity = rate_quantity;
    rep.constant_override = constant_override;
    finish_theorem1_style(rep, transform(a, Transform::standardize));
    return rep;
}

BoundReport rate_product(std::span<const double> z, std::span<const double> r,
                         const StratumLayout& layout, double constant_override) {
    const std::size_t n = static_cast<std::size_t>(layout.total());
    if (z.size() != n || r.size() != n)
        throw LayoutMismatch("score vectors must match the layout size");

    const int K = layout.num_strata();
    NeumaierSum var, rate_sum;
    std::vector<std::vector<double>> blocks(K);
    for (int k = 0; k < K; ++k) {
        const int nk = layout.size(k), off = layout.offset(k);
        NeumaierSum zs, rs;
        for (int i = 0; i < nk; ++i) {
            zs.add(z[off + i]);
            rs.add(r[off + i]);
        }
        const double zbar = zs.value() / nk, rbar = rs.value() / nk;
        NeumaierSum z2, r2, z3, r3;
        for (int i = 0; i < nk; ++i) {
            const double dz = z[off + i] - zbar, dr = r[off + i] - rbar;
            z2.add(dz * dz);
            r2.add(dr * dr);
            z3.add(std::abs(dz) * dz * dz); // |dz|^3
            r3.add(std::abs(dr) * dr * dr);
        }
        if (nk >= 2) var.add(z2.value() * r2.value() / (nk - 1));
        // n_k * M^3(z) M^3(r) = (sum|dz|^3)(sum|dr|^3) / n_k
        rate_sum.add(z3.value() * r3.value() / nk);

        // Compiled outer-product block for the theta diagnostic.
        blocks[k].resize(static_cast<std::size_t>(nk) * nk);
        for (int i = 0; i < nk; ++i)
            for (int jj = 0; jj < nk; ++jj)
                blocks[k][static_cast<std::size_t>(i) * nk + jj] =
                    (z[off + i] - zbar) * (r[off + jj] - rbar);
    }

    const double sigma2 = var.value();
    if (!(sigma2 > 0.0))
        throw DegenerateScores("score vectors admit no variation");
    const double sigma3 = sigma2 * std::sqrt(sigma2);

    BoundReport rep;
    rep.method = "product";
    rep.constant_override = constant_override;
    rep.rate_quantity = rate_sum.value() / sigma3;
    const StratifiedMatrix outer(layout, std::move(blocks));
    finish_theorem1_style(rep, transform(outer, Transform::standardize));
    return rep;
}

} // namespace stratperm
