#include "stratperm/multivariate.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "stratperm/errors.hpp"
#include "stratperm/moments.hpp"

namespace stratperm {

namespace {

// Condition for the linear-combination rate: each component centered and the
// Gram matrix the identity, both within tol on the standardized (O(1)) scale.
void check_standardized(const MultiStatistic& m, double tol) {
    const int H = static_cast<int>(m.components.size());
    for (int h = 0; h < H; ++h) {
        const StratifiedMatrix centered = transform(m.components[h], Transform::center);
        double diff = 0.0;
        for (int k = 0; k < m.layout.num_strata(); ++k) {
            const auto raw = m.components[h].block(k);
            const auto cen = centered.block(k);
            for (std::size_t i = 0; i < raw.size(); ++i)
                diff = std::max(diff, std::abs(raw[i] - cen[i]));
        }
        if (diff > tol)
            throw NotStandardized("component " + std::to_string(h) +
                                  " is not centered (residual " + std::to_string(diff) + ")");
    }
    for (int h = 0; h < H; ++h)
        for (int l = h; l < H; ++l) {
            const double v = inner_product_K(m.components[h], m.components[l]);
            const double want = h == l ? 1.0 : 0.0;
            if (std::abs(v - want) > tol)
                throw NotStandardized("components " + std::to_string(h) + "," +
                                      std::to_string(l) + " have inner product " +
                                      std::to_string(v));
        }
}

} // namespace

MultiStatistic make_multi_statistic(std::vector<StratifiedMatrix> components) {
    if (components.empty())
        throw DegenerateLayout("a multivariate statistic needs at least one component");
    for (std::size_t h = 1; h < components.size(); ++h)
        if (!(components[h].layout() == components[0].layout()))
            throw LayoutMismatch("all components must share one layout");
    MultiStatistic m;
    m.layout = components[0].layout();
    m.components = std::move(components);
    return m;
}

double inner_product_K(const StratifiedMatrix& g, const StratifiedMatrix& h) {
    if (!(g.layout() == h.layout()))
        throw LayoutMismatch("inner product needs matching layouts");
    NeumaierSum total;
    for (int k = 0; k < g.layout().num_strata(); ++k) {
        const int nk = g.layout().size(k);
        if (nk < 2) continue;
        const auto gb = g.block(k), hb = h.block(k);
        NeumaierSum s;
        for (std::size_t i = 0; i < gb.size(); ++i) s.add(gb[i] * hb[i]);
        total.add(s.value() / (nk - 1));
    }
    return total.value();
}

MultiStatistic standardize_multi(const MultiStatistic& m) {
    const int H = static_cast<int>(m.components.size());
    if (H == 0)
        throw DegenerateLayout("a multivariate statistic needs at least one component");

    std::vector<StratifiedMatrix> centered;
    centered.reserve(H);
    for (const StratifiedMatrix& g : m.components)
        centered.push_back(transform(g, Transform::center));

    Eigen::MatrixXd gram(H, H);
    for (int h = 0; h < H; ++h)
        for (int l = h; l < H; ++l) {
            const double v = inner_product_K(centered[h], centered[l]);
            gram(h, l) = v;
            gram(l, h) = v;
        }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    const Eigen::VectorXd lam = eig.eigenvalues();
    const double lmax = lam.maxCoeff();
    if (!(lmax > 0.0) || lam.minCoeff() <= 1e-10 * lmax)
        throw SingularCovariance("component Gram matrix is numerically singular");
    const Eigen::MatrixXd root_inv = eig.eigenvectors() *
                                     lam.cwiseSqrt().cwiseInverse().asDiagonal() *
                                     eig.eigenvectors().transpose();

    const StratumLayout& L = m.layout;
    std::vector<StratifiedMatrix> mixed;
    mixed.reserve(H);
    for (int h = 0; h < H; ++h) {
        std::vector<std::vector<double>> blocks(L.num_strata());
        for (int k = 0; k < L.num_strata(); ++k) {
            const std::size_t sz = centered[0].block(k).size();
            blocks[k].assign(sz, 0.0);
            for (int l = 0; l < H; ++l) {
                const double w = root_inv(h, l);
                const auto src = centered[l].block(k);
                for (std::size_t i = 0; i < sz; ++i) blocks[k][i] += w * src[i];
            }
        }
        mixed.emplace_back(L, std::move(blocks));
    }
    MultiStatistic out;
    out.layout = L;
    out.components = std::move(mixed);
    return out;
}

BoundReport rate_linear_combination(const MultiStatistic& m, std::span<const double> b) {
    const int H = static_cast<int>(m.components.size());
    if (static_cast<int>(b.size()) != H)
        throw LayoutMismatch("combination vector must have one entry per component");
    NeumaierSum norm2;
    for (double v : b) norm2.add(v * v);
    if (std::abs(std::sqrt(norm2.value()) - 1.0) > 1e-12)
        throw DomainError("combination vector must have unit norm");
    check_standardized(m, 1e-8);

    const StratumLayout& L = m.layout;
    std::vector<std::vector<double>> blocks(L.num_strata());
    double rate = 0.0;
    for (int k = 0; k < L.num_strata(); ++k) {
        const std::size_t sz = m.components[0].block(k).size();
        blocks[k].assign(sz, 0.0);
        for (int h = 0; h < H; ++h) {
            const auto src = m.components[h].block(k);
            for (std::size_t i = 0; i < sz; ++i) blocks[k][i] += b[h] * src[i];
        }
        for (double v : blocks[k]) rate = std::max(rate, std::abs(v));
    }
    const StratifiedMatrix combo(L, std::move(blocks));
    return assemble_rate_report(combo, "linear_combination", rate);
}

double rate_convex_sets(int h_dim, double b_n, std::int64_t n, int k_strata) {
    if (h_dim < 1)
        throw DomainError("dimension must be at least 1");
    if (k_strata < 1)
        throw DomainError("need at least one stratum");
    if (n <= k_strata)
        throw DomainError("need more units than strata");
    if (!(b_n >= 0.0))
        throw DomainError("entry bound must be non-negative");
    const double H = h_dim, B = b_n;
    const double nm = static_cast<double>(n - k_strata);
    return std::pow(H, 13.0 / 4.0) * B * (static_cast<double>(n) * B * B + k_strata) +
           std::pow(H, 3.0 / 4.0) * B +
           std::pow(H, 13.0 / 8.0) * std::pow(nm, 0.25) * B * std::sqrt(B) +
           std::pow(H, 11.0 / 8.0) * std::sqrt(nm) * B * B;
}

} // namespace stratperm
