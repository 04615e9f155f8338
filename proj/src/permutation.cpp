#include "stratperm/permutation.hpp"

#include <numeric>
#include <utility>

#include "stratperm/errors.hpp"

namespace stratperm {

StratifiedPermutation identity_permutation(const StratumLayout& layout) {
    StratifiedPermutation pi{layout, std::vector<std::int32_t>(layout.total())};
    std::iota(pi.images.begin(), pi.images.end(), 0);
    return pi;
}

void sample_permutation_into(StratifiedPermutation& pi, RandomSource& rng) {
    std::iota(pi.images.begin(), pi.images.end(), 0);
    const StratumLayout& L = pi.layout;
    for (int k = 0; k < L.num_strata(); ++k) {
        auto* base = pi.images.data() + L.offset(k);
        for (int pos = L.size(k) - 1; pos > 0; --pos) {
            const auto other = rng.uniform_below(static_cast<std::uint64_t>(pos) + 1);
            std::swap(base[pos], base[other]);
        }
    }
}

StratifiedPermutation sample_permutation(const StratumLayout& layout, RandomSource& rng) {
    StratifiedPermutation pi = identity_permutation(layout);
    sample_permutation_into(pi, rng);
    return pi;
}

double statistic(const StratifiedMatrix& a, const StratifiedPermutation& pi) {
    if (a.layout() != pi.layout)
        throw LayoutMismatch("matrix and permutation layouts differ");
    const StratumLayout& L = a.layout();
    double total = 0.0;
    for (int k = 0; k < L.num_strata(); ++k) {
        const int n = L.size(k), off = L.offset(k);
        const double* blk = a.block(k).data();
        double s = 0.0;
        for (int i = 0; i < n; ++i)
            s += blk[static_cast<std::size_t>(i) * n + (pi.images[off + i] - off)];
        total += s;
    }
    return total;
}

SteinPairDraw stein_pair_draw(const StratifiedMatrix& a, const StratifiedPermutation& pi,
                              RandomSource& rng) {
    const StratumLayout& L = a.layout();
    if (pi.layout != L)
        throw LayoutMismatch("matrix and permutation layouts differ");
    const int n = L.total(), K = L.num_strata();
    if (n == K)
        throw DegenerateLayout("all strata are singletons; no transposition exists");

    // P(B = k) proportional to n_k - 1.
    const std::uint64_t pick = rng.uniform_below(static_cast<std::uint64_t>(n - K));
    int stratum = 0;
    std::uint64_t acc = 0;
    for (; stratum < K; ++stratum) {
        acc += static_cast<std::uint64_t>(L.size(stratum) - 1);
        if (pick < acc) break;
    }

    const int nk = L.size(stratum), off = L.offset(stratum);
    const int i = off + static_cast<int>(rng.uniform_below(nk));
    int j = off + static_cast<int>(rng.uniform_below(nk - 1));
    if (j >= i) ++j;

    SteinPairDraw out;
    out.stratum = stratum;
    out.i = i;
    out.j = j;
    out.pi_transposed = pi;
    std::swap(out.pi_transposed.images[i], out.pi_transposed.images[j]);
    return out;
}

} // namespace stratperm
