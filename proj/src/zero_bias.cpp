#include "stratperm/zero_bias.hpp"

#include <string>
#include <utility>

#include "stratperm/errors.hpp"
#include "stratperm/moments.hpp"

namespace stratperm {

StratifiedPermutation rearranged_permutation(const StratifiedPermutation& pi, int i, int j,
                                             int p, int q) {
    // Positions whose images are p and q under the original pi.
    int p_pre = -1, q_pre = -1;
    const StratumLayout& L = pi.layout;
    const int k = L.stratum_of(i), off = L.offset(k), end = off + L.size(k);
    for (int m = off; m < end; ++m) {
        if (pi.images[m] == p) p_pre = m;
        if (pi.images[m] == q) q_pre = m;
    }

    StratifiedPermutation out = pi;
    auto& im = out.images;
    // Composing with a transposition on the right swaps two positions of the
    // image array. The case split guarantees {out(i), out(j)} = {p, q}; the
    // double coincidence q = pi(i), p = pi(j) falls through to the last branch
    // where the two swaps cancel and out = pi.
    if (q == pi.images[i] && p != pi.images[j]) {
        std::swap(im[p_pre], im[j]);
    } else if (q != pi.images[i] && p == pi.images[j]) {
        std::swap(im[q_pre], im[i]);
    } else {
        std::swap(im[p_pre], im[i]);
        std::swap(im[q_pre], im[j]);
    }
    return out;
}

ZeroBiasSampler::ZeroBiasSampler(const StratifiedMatrix& a, int max_stratum_size)
    : a0_(transform(a, Transform::center)) {
    const StratumLayout& L = a0_.layout();
    const MomentReport mom = moments(a0_);
    if (!(mom.variance > 0.0))
        throw DegenerateVariance("zero-bias coupling needs a positive variance");
    share_ = mom.variance_share;
    tables_.resize(L.num_strata());
    for (int k = 0; k < L.num_strata(); ++k) {
        if (share_[k] > 0.0 && L.size(k) > max_stratum_size)
            throw StratumTooLarge("stratum " + std::to_string(k) + " has " +
                                  std::to_string(L.size(k)) + " units; four-index table cap is " +
                                  std::to_string(max_stratum_size));
    }
}

ZeroBiasSampler::~ZeroBiasSampler() = default;
ZeroBiasSampler::ZeroBiasSampler(ZeroBiasSampler&&) noexcept = default;
ZeroBiasSampler& ZeroBiasSampler::operator=(ZeroBiasSampler&&) noexcept = default;

const AliasTable& ZeroBiasSampler::table_for(int k) {
    if (!tables_[k]) {
        const int n = a0_.layout().size(k);
        const auto nn = static_cast<std::size_t>(n);
        std::vector<double> w(nn * nn * nn * nn);
        // Flat index (((i*n + j)*n + p)*n + q), local indices. Degenerate
        // combinations (i = j or p = q) get weight zero automatically.
        std::size_t idx = 0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int p = 0; p < n; ++p)
                    for (int q = 0; q < n; ++q) {
                        const double d = a0_.at(k, i, p) + a0_.at(k, j, q) -
                                         a0_.at(k, i, q) - a0_.at(k, j, p);
                        w[idx++] = d * d;
                    }
        tables_[k] = std::make_unique<AliasTable>(w);
    }
    return *tables_[k];
}

ZeroBiasDraw ZeroBiasSampler::draw(RandomSource& rng) {
    const StratumLayout& L = a0_.layout();
    ZeroBiasDraw out;
    out.base = sample_permutation(L, rng);
    out.stratum = rng.categorical(share_);

    const int n = L.size(out.stratum), off = L.offset(out.stratum);
    std::size_t idx = table_for(out.stratum).sample(rng);
    const int q = static_cast<int>(idx % n);
    idx /= n;
    const int p = static_cast<int>(idx % n);
    idx /= n;
    const int j = static_cast<int>(idx % n);
    const int i = static_cast<int>(idx / n);
    out.i = off + i;
    out.j = off + j;
    out.p = off + p;
    out.q = off + q;

    out.pi_dagger = rearranged_permutation(out.base, out.i, out.j, out.p, out.q);
    out.pi_ddagger = out.pi_dagger;
    std::swap(out.pi_ddagger.images[out.i], out.pi_ddagger.images[out.j]);

    out.u = rng.uniform01();
    const double wd = statistic(a0_, out.pi_dagger);
    const double wdd = statistic(a0_, out.pi_ddagger);
    out.w_star = out.u * wd + (1.0 - out.u) * wdd;
    return out;
}

ZeroBiasDraw zero_bias_draw(const StratifiedMatrix& a, RandomSource& rng) {
    ZeroBiasSampler sampler(a);
    return sampler.draw(rng);
}

} // namespace stratperm
