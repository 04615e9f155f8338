// Zero-bias coupling for W_{A,pi}: a stratum drawn with probability equal to
// its variance share, a four-index draw (I,J,P,Q) with mass proportional to
// (a0_ip + a0_jq - a0_iq - a0_jp)^2, and the rearranged permutations
// pi-dagger / pi-double-dagger whose statistics are interpolated by an
// independent U to produce W*. The defining identity
// var(W) E f'(W*) = E[W f(W)] is checked exactly by the oracle module.
#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "stratperm/matrix.hpp"
#include "stratperm/permutation.hpp"
#include "stratperm/rng.hpp"

namespace stratperm {

struct ZeroBiasDraw {
    StratifiedPermutation base;       // fresh uniform pi
    int stratum = -1;                 // B-dagger, drawn with P = R^2_[k]
    int i = -1, j = -1, p = -1, q = -1; // global indices inside the stratum
    StratifiedPermutation pi_dagger;
    StratifiedPermutation pi_ddagger; // pi_dagger o tau_ij
    double u = 0.0;                   // independent Uniform(0,1)
    double w_star = 0.0;              // u W(pi_dagger) + (1-u) W(pi_ddagger), centered matrix
};

// Builds pi_dagger from pi and the index draw; exposed for the oracle's full
// enumeration. All indices are global and must lie in one stratum.
StratifiedPermutation rearranged_permutation(const StratifiedPermutation& pi, int i, int j,
                                             int p, int q);

class ZeroBiasSampler {
public:
    // Centers the matrix internally. Strata with positive variance share must
    // have n_k <= max_stratum_size (the four-index alias table is n_k^4
    // entries); others are never drawn and have no table.
    explicit ZeroBiasSampler(const StratifiedMatrix& a, int max_stratum_size = 32);
    ~ZeroBiasSampler();
    ZeroBiasSampler(ZeroBiasSampler&&) noexcept;
    ZeroBiasSampler& operator=(ZeroBiasSampler&&) noexcept;

    ZeroBiasDraw draw(RandomSource& rng);

    const StratifiedMatrix& centered() const { return a0_; }
    const std::vector<double>& variance_share() const { return share_; }

private:
    const AliasTable& table_for(int k); // built lazily, cached per stratum

    StratifiedMatrix a0_;
    std::vector<double> share_;
    std::vector<std::unique_ptr<AliasTable>> tables_;
};

// One-shot convenience; constructs the sampler each call. Prefer the class
// when drawing repeatedly.
ZeroBiasDraw zero_bias_draw(const StratifiedMatrix& a, RandomSource& rng);

} // namespace stratperm
