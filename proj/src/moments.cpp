#include "stratperm/moments.hpp"

#include <cmath>

#include "stratperm/errors.hpp"

namespace stratperm {

MomentReport moments(const StratifiedMatrix& a) {
    const StratumLayout& L = a.layout();
    const int K = L.num_strata();
    MomentReport rep;
    rep.stratum_variance.assign(K, 0.0);

    // mean = sum_k n_k * grand_mean_k = sum_k (block sum) / n_k
    NeumaierSum mean;
    StratifiedMatrix a0 = transform(a, Transform::center);
    NeumaierSum var;
    std::vector<double> raw_beta(K, 0.0); // sum |a0|^3, scaled by sigma^3 later
    for (int k = 0; k < K; ++k) {
        const int n = L.size(k);
        NeumaierSum bs;
        for (double v : a.block(k)) bs.add(v);
        mean.add(bs.value() / n);

        if (n >= 2) {
            NeumaierSum ss, cs;
            for (double v : a0.block(k)) {
                ss.add(v * v);
                cs.add(std::abs(v) * v * v);
            }
            rep.stratum_variance[k] = ss.value() / (n - 1);
            raw_beta[k] = cs.value();
        }
        var.add(rep.stratum_variance[k]);
    }
    rep.mean = mean.value();
    rep.variance = var.value();

    if (rep.variance > 0.0) {
        const double sigma3 = rep.variance * std::sqrt(rep.variance);
        rep.variance_share.resize(K);
        rep.beta.resize(K);
        NeumaierSum rate;
        for (int k = 0; k < K; ++k) {
            rep.variance_share[k] = rep.stratum_variance[k] / rep.variance;
            rep.beta[k] = raw_beta[k] / sigma3;
            rate.add(rep.beta[k] / L.size(k));
        }
        rep.third_moment_rate = rate.value();
    }
    return rep;
}

double variance_expanded_form(const StratifiedMatrix& a) {
    NeumaierSum total;
    for (int k = 0; k < a.num_strata(); ++k) {
        const int n = a.layout().size(k);
        if (n < 2) continue;
        NeumaierSum sq, grand;
        std::vector<double> row(n, 0.0), col(n, 0.0);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                const double v = a.at(k, i, j);
                sq.add(v * v);
                row[i] += v;
                col[j] += v;
                grand.add(v);
            }
        }
        NeumaierSum rs, cs;
        for (int i = 0; i < n; ++i) {
            rs.add(row[i] * row[i]);
            cs.add(col[i] * col[i]);
        }
        const double g = grand.value() / (static_cast<double>(n) * n);
        // sum a^2 - (1/n) sum_i (row sum)^2 - (1/n) sum_j (col sum)^2 + n^2 g^2
        const double dev = sq.value() - rs.value() / n - cs.value() / n +
                           static_cast<double>(n) * n * g * g;
        total.add(dev / (n - 1));
    }
    return total.value();
}

double finite_pop_moment(std::span<const double> y, double r) {
    if (y.empty())
        throw DomainError("finite_pop_moment needs at least one value");
    if (!(r > 0.0))
        throw DomainError("finite_pop_moment order must be positive");
    NeumaierSum mean;
    for (double v : y) mean.add(v);
    const double ybar = mean.value() / static_cast<double>(y.size());
    NeumaierSum acc;
    for (double v : y) acc.add(std::pow(std::abs(v - ybar), r));
    return acc.value() / static_cast<double>(y.size());
}

} // namespace stratperm
