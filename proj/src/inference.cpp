#include "stratperm/inference.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <thread>

#include "stratperm/errors.hpp"
#include "stratperm/moments.hpp"
#include "stratperm/normal.hpp"
#include "stratperm/permutation.hpp"

namespace stratperm {

namespace {

// Every reference value and the observed statistic go through the same
// summation order (per-stratum partial sums over ascending position, folded
// across strata), so the realized assignment ties itself bit-exactly and the
// tie epsilon only has to absorb coincidental cross-subset ties.
double zr_statistic(std::span<const int> z, std::span<const double> r,
                    const StratumLayout& L, std::span<const std::int32_t> pi) {
    double w = 0.0;
    for (int k = 0; k < L.num_strata(); ++k) {
        double s = 0.0;
        const int off = L.offset(k), nk = L.size(k);
        for (int i = off; i < off + nk; ++i)
            if (z[pi[i]]) s += r[i];
        w += s;
    }
    return w;
}

std::vector<int> treated_counts(std::span<const int> z, const StratumLayout& L) {
    if (static_cast<int>(z.size()) != L.total())
        throw LayoutMismatch("assignment vector must match the layout size");
    std::vector<int> c(L.num_strata(), 0);
    for (int k = 0; k < L.num_strata(); ++k)
        for (int i = 0; i < L.size(k); ++i) {
            const int v = z[L.offset(k) + i];
            if (v != 0 && v != 1)
                throw DomainError("assignment entries must be 0 or 1");
            c[k] += v;
        }
    return c;
}

// The reference law is a point mass iff no stratum mixes both arms over
// varying scores.
bool reference_degenerate(std::span<const double> r, const StratumLayout& L,
                          const std::vector<int>& c) {
    for (int k = 0; k < L.num_strata(); ++k) {
        if (c[k] == 0 || c[k] == L.size(k)) continue;
        const int off = L.offset(k);
        const auto [lo, hi] = std::minmax_element(r.begin() + off,
                                                  r.begin() + off + L.size(k));
        if (*lo != *hi) return false;
    }
    return true;
}

std::uint64_t saturating_choose(int n, int c) {
    std::uint64_t v = 1;
    c = std::min(c, n - c);
    for (int i = 1; i <= c; ++i) {
        // v * (n - c + i) / i, watching for overflow before multiplying
        const std::uint64_t f = static_cast<std::uint64_t>(n - c + i);
        if (v > std::numeric_limits<std::uint64_t>::max() / f)
            return std::numeric_limits<std::uint64_t>::max();
        v = v * f / i;
    }
    return v;
}

// All sums of c-element subsets of the stratum's scores, each subset summed
// over ascending positions, in lexicographic subset order.
std::vector<double> subset_sums(std::span<const double> r, int off, int nk, int c) {
    std::vector<double> out;
    out.reserve(saturating_choose(nk, c));
    std::vector<int> idx(c);
    std::iota(idx.begin(), idx.end(), 0);
    while (true) {
        double s = 0.0;
        for (int i : idx) s += r[off + i];
        out.push_back(s);
        int j = c - 1;
        while (j >= 0 && idx[j] == nk - c + j) --j;
        if (j < 0) break;
        ++idx[j];
        for (int t = j + 1; t < c; ++t) idx[t] = idx[t - 1] + 1;
    }
    return out;
}

struct TailCounts {
    std::uint64_t greater_eq = 0, less_eq = 0, total = 0;
};

TailCounts enumerate_tails(std::span<const double> r, const StratumLayout& L,
                           const std::vector<int>& c, double obs, double eps,
                           std::uint64_t budget) {
    const int K = L.num_strata();
    std::uint64_t total = 1;
    for (int k = 0; k < K; ++k) {
        const std::uint64_t m = saturating_choose(L.size(k), c[k]);
        if (total > budget / m)
            throw BudgetExceeded("exact test needs more than " + std::to_string(budget) +
                                 " distinct assignments");
        total *= m;
    }

    std::vector<std::vector<double>> lists(K);
    for (int k = 0; k < K; ++k)
        lists[k] = subset_sums(r, L.offset(k), L.size(k), c[k]);

    TailCounts tc;
    tc.total = total;
    std::vector<std::size_t> pos(K, 0);
    std::vector<double> prefix(K + 1, 0.0);
    for (int k = 0; k < K; ++k) prefix[k + 1] = prefix[k] + lists[k][0];
    while (true) {
        const double v = prefix[K];
        if (v >= obs - eps) ++tc.greater_eq;
        if (v <= obs + eps) ++tc.less_eq;
        int k = K - 1;
        while (k >= 0) {
            if (++pos[k] < lists[k].size()) break;
            pos[k] = 0;
            --k;
        }
        if (k < 0) break;
        for (int j = k; j < K; ++j) prefix[j + 1] = prefix[j] + lists[j][pos[j]];
    }
    return tc;
}

TailCounts sample_tails(std::span<const int> z, std::span<const double> r,
                        const StratumLayout& L, double obs, double eps, std::int64_t reps,
                        const RandomSource& rng, int workers) {
    constexpr int kBatches = 64;
    const std::int64_t base = reps / kBatches, extra = reps % kBatches;
    std::uint64_t cg[kBatches] = {}, cl[kBatches] = {};
    std::atomic<int> next{0};

    const auto worker = [&] {
        StratifiedPermutation pi = identity_permutation(L);
        for (int b = next.fetch_add(1); b < kBatches; b = next.fetch_add(1)) {
            const std::int64_t m = base + (b < extra ? 1 : 0);
            if (m == 0) continue;
            RandomSource stream = rng.substream(static_cast<std::uint64_t>(b));
            for (std::int64_t t = 0; t < m; ++t) {
                sample_permutation_into(pi, stream);
                const double v = zr_statistic(z, r, L, pi.images);
                if (v >= obs - eps) ++cg[b];
                if (v <= obs + eps) ++cl[b];
            }
        }
    };

    const int nthreads =
        static_cast<int>(std::min<std::int64_t>({workers, kBatches, reps}));
    if (nthreads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(nthreads);
        for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    TailCounts tc;
    tc.total = static_cast<std::uint64_t>(reps) + 1; // observed draw included
    tc.greater_eq = 1;
    tc.less_eq = 1;
    for (int b = 0; b < kBatches; ++b) {
        tc.greater_eq += cg[b];
        tc.less_eq += cl[b];
    }
    return tc;
}

double combine_p(Alternative alt, double pg, double pl) {
    switch (alt) {
    case Alternative::greater: return pg;
    case Alternative::less: return pl;
    case Alternative::two_sided: return std::min(1.0, 2.0 * std::min(pg, pl));
    }
    throw DomainError("unknown alternative");
}

// Desk-scale cutoff for materializing the product matrix the theta
// diagnostic needs.
bool rate_report_affordable(const StratumLayout& L) {
    std::uint64_t cells = 0;
    for (int k = 0; k < L.num_strata(); ++k) {
        const std::uint64_t nk = static_cast<std::uint64_t>(L.size(k));
        cells += nk * nk;
        if (cells > 4'000'000) return false;
    }
    return true;
}

} // namespace

TestResult permutation_test(std::span<const int> z, std::span<const double> r,
                            const StratumLayout& layout, Alternative alternative,
                            TestMethod method, std::int64_t reps, const RandomSource& rng,
                            int workers, std::uint64_t budget) {
    if (static_cast<int>(r.size()) != layout.total())
        throw LayoutMismatch("score vector must match the layout size");
    for (double v : r)
        if (!std::isfinite(v))
            throw DomainError("scores must be finite");
    if (method == TestMethod::monte_carlo && reps < 1)
        throw DomainError("Monte Carlo needs at least one replication");
    if (workers < 1)
        throw DomainError("worker count must be positive");

    const std::vector<int> c = treated_counts(z, layout);

    TestResult res;
    res.alternative = alternative;
    res.method = method;
    res.reps = method == TestMethod::monte_carlo ? reps : 0;

    const StratifiedPermutation id = identity_permutation(layout);
    res.observed = zr_statistic(z, r, layout, id.images);
    const double eps = 1e-12 * std::max(1.0, std::abs(res.observed));

    if (reference_degenerate(r, layout, c)) {
        res.degenerate = true;
        res.p_value = 1.0;
        return res;
    }

    const bool want_rate =
        method == TestMethod::normal_approx || rate_report_affordable(layout);
    if (want_rate) {
        std::vector<double> zd(z.begin(), z.end());
        res.rate_report = rate_product(zd, r, layout);
    }

    switch (method) {
    case TestMethod::exact: {
        const TailCounts tc = enumerate_tails(r, layout, c, res.observed, eps, budget);
        res.count_greater_eq = tc.greater_eq;
        res.count_less_eq = tc.less_eq;
        res.denominator = tc.total;
        res.p_value = combine_p(alternative,
                                static_cast<double>(tc.greater_eq) / tc.total,
                                static_cast<double>(tc.less_eq) / tc.total);
        return res;
    }
    case TestMethod::monte_carlo: {
        const TailCounts tc =
            sample_tails(z, r, layout, res.observed, eps, reps, rng, workers);
        res.count_greater_eq = tc.greater_eq;
        res.count_less_eq = tc.less_eq;
        res.denominator = tc.total;
        res.p_value = combine_p(alternative,
                                static_cast<double>(tc.greater_eq) / tc.total,
                                static_cast<double>(tc.less_eq) / tc.total);
        return res;
    }
    case TestMethod::normal_approx: {
        // Product-form moments: mean sum_k c_k rbar_k, variance
        // sum_k (n_k - 1)^{-1} [sum (z - zbar)^2][sum (r - rbar)^2].
        NeumaierSum mean, var;
        for (int k = 0; k < layout.num_strata(); ++k) {
            const int nk = layout.size(k), off = layout.offset(k);
            NeumaierSum rs;
            for (int i = 0; i < nk; ++i) rs.add(r[off + i]);
            const double rbar = rs.value() / nk;
            mean.add(c[k] * rbar);
            if (nk < 2) continue;
            const double zbar = static_cast<double>(c[k]) / nk;
            NeumaierSum r2;
            for (int i = 0; i < nk; ++i) {
                const double d = r[off + i] - rbar;
                r2.add(d * d);
            }
            // sum (z - zbar)^2 = c (1 - zbar)^2 + (n - c) zbar^2
            const double z2 =
                c[k] * (1.0 - zbar) * (1.0 - zbar) + (nk - c[k]) * zbar * zbar;
            var.add(z2 * r2.value() / (nk - 1));
        }
        const double sigma = std::sqrt(var.value());
        const double t = (res.observed - mean.value()) / sigma;
        res.p_value = combine_p(alternative, normal_sf(t), normal_cdf(t));
        return res;
    }
    }
    throw DomainError("unknown test method");
}

TestResult iv_test(std::span<const double> y, std::span<const double> d,
                   std::span<const int> z, const StratumLayout& layout, double beta0,
                   Alternative alternative, TestMethod method, std::int64_t reps,
                   const RandomSource& rng, int workers, std::uint64_t budget) {
    if (y.size() != d.size())
        throw LayoutMismatch("outcome and dose vectors must have equal length");
    if (!std::isfinite(beta0))
        throw DomainError("effect under test must be finite");
    std::vector<double> r(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) r[i] = y[i] - beta0 * d[i];
    return permutation_test(z, r, layout, alternative, method, reps, rng, workers,
                            budget);
}

IvInterval iv_confidence_interval(std::span<const double> y, std::span<const double> d,
                                  std::span<const int> z, const StratumLayout& layout,
                                  double alpha, std::span<const double> beta_grid,
                                  TestMethod method, std::int64_t reps,
                                  const RandomSource& rng, int workers,
                                  std::uint64_t budget) {
    if (!(alpha >= 0.0 && alpha < 1.0))
        throw DomainError("alpha must lie in [0, 1)");
    if (beta_grid.empty())
        throw DomainError("beta grid is empty");
    if (!std::is_sorted(beta_grid.begin(), beta_grid.end()))
        throw DomainError("beta grid must be sorted ascending");

    IvInterval iv;
    iv.alpha = alpha;
    iv.grid.assign(beta_grid.begin(), beta_grid.end());
    iv.p_values.resize(beta_grid.size());
    iv.lo = std::numeric_limits<double>::quiet_NaN();
    iv.hi = std::numeric_limits<double>::quiet_NaN();

    int first = -1, last = -1;
    for (std::size_t i = 0; i < beta_grid.size(); ++i) {
        const TestResult t =
            iv_test(y, d, z, layout, beta_grid[i], Alternative::two_sided, method, reps,
                    rng.substream(i), workers, budget);
        iv.p_values[i] = t.p_value;
        if (t.p_value > alpha) {
            if (first < 0) first = static_cast<int>(i);
            last = static_cast<int>(i);
        }
    }
    if (first >= 0) {
        iv.empty = false;
        iv.lo = beta_grid[first];
        iv.hi = beta_grid[last];
        for (int i = first; i <= last; ++i)
            if (iv.p_values[i] <= alpha) iv.nonconvex = true;
    }
    return iv;
}

} // namespace stratperm
