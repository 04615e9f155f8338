#include "stratperm/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "stratperm/errors.hpp"
#include "stratperm/moments.hpp"
#include "stratperm/normal.hpp"
#include "stratperm/zero_bias.hpp"

namespace stratperm {

double ExactDistribution::mean() const {
    NeumaierSum s;
    for (std::size_t i = 0; i < values.size(); ++i)
        s.add(values[i] * static_cast<double>(counts[i]));
    return s.value() / static_cast<double>(denominator);
}

double ExactDistribution::variance() const {
    const double mu = mean();
    NeumaierSum s;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double d = values[i] - mu;
        s.add(d * d * static_cast<double>(counts[i]));
    }
    return s.value() / static_cast<double>(denominator);
}

std::uint64_t count_permutations(const StratumLayout& layout) {
    std::uint64_t total = 1;
    for (int k = 0; k < layout.num_strata(); ++k) {
        for (int f = 2; f <= layout.size(k); ++f) {
            if (total > UINT64_MAX / static_cast<std::uint64_t>(f))
                return UINT64_MAX;
            total *= static_cast<std::uint64_t>(f);
        }
    }
    return total;
}

namespace {

void check_budget(const StratumLayout& layout, std::uint64_t budget, std::uint64_t factor = 1) {
    const std::uint64_t perms = count_permutations(layout);
    if (perms == UINT64_MAX || factor == 0 || perms > budget / std::max<std::uint64_t>(factor, 1))
        throw BudgetExceeded("enumeration needs " + std::to_string(perms) + " x " +
                             std::to_string(factor) + " outcomes, budget is " +
                             std::to_string(budget));
}

using Atoms = std::vector<std::pair<double, std::uint64_t>>; // sorted by value

// Merge sorted raw (value, count) pairs whose values sit within atol of the
// run's first value.
Atoms dedup(Atoms raw, double atol) {
    std::sort(raw.begin(), raw.end());
    Atoms out;
    for (const auto& [v, c] : raw) {
        if (!out.empty() && v - out.back().first <= atol)
            out.back().second += c;
        else
            out.emplace_back(v, c);
    }
    return out;
}

double max_abs_value(const Atoms& atoms) {
    double m = 0.0;
    for (const auto& [v, c] : atoms) m = std::max(m, std::abs(v));
    return m;
}

// All n_k! values of the block-k partial statistic.
Atoms stratum_permutation_values(const StratifiedMatrix& a, int k) {
    const int n = a.layout().size(k);
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Atoms raw;
    do {
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += a.at(k, i, perm[i]);
        raw.emplace_back(s, 1);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return raw;
}

} // namespace

ExactDistribution enumerate_distribution(const StratifiedMatrix& a, std::uint64_t budget) {
    check_budget(a.layout(), budget);
    Atoms acc{{0.0, 1}};
    for (int k = 0; k < a.num_strata(); ++k) {
        const Atoms part = dedup(stratum_permutation_values(a, k), 0.0);
        Atoms next;
        next.reserve(acc.size() * part.size());
        for (const auto& [va, ca] : acc)
            for (const auto& [vb, cb] : part)
                next.emplace_back(va + vb, ca * cb);
        const double scale = std::max(1.0, max_abs_value(next));
        acc = dedup(std::move(next), 1e-12 * scale);
    }
    ExactDistribution dist;
    dist.denominator = count_permutations(a.layout());
    dist.values.reserve(acc.size());
    dist.counts.reserve(acc.size());
    for (const auto& [v, c] : acc) {
        dist.values.push_back(v);
        dist.counts.push_back(c);
    }
    return dist;
}

double exact_distance(const ExactDistribution& dist, Distance which) {
    if (dist.values.empty() || dist.denominator == 0)
        throw DomainError("empty distribution");
    std::vector<double> cum(dist.values.size());
    std::uint64_t running = 0;
    for (std::size_t i = 0; i < dist.values.size(); ++i) {
        running += dist.counts[i];
        cum[i] = static_cast<double>(running) / static_cast<double>(dist.denominator);
    }
    return which == Distance::kolmogorov ? kolmogorov_to_std_normal(dist.values, cum)
                                         : wasserstein_to_std_normal(dist.values, cum);
}

void for_each_permutation(const StratumLayout& layout, std::uint64_t budget,
                          const std::function<void(const StratifiedPermutation&)>& fn) {
    check_budget(layout, budget);
    const int K = layout.num_strata();
    // Per-stratum lists of local permutations, lexicographic.
    std::vector<std::vector<std::vector<int>>> locals(K);
    for (int k = 0; k < K; ++k) {
        std::vector<int> perm(layout.size(k));
        std::iota(perm.begin(), perm.end(), 0);
        do {
            locals[k].push_back(perm);
        } while (std::next_permutation(perm.begin(), perm.end()));
    }

    StratifiedPermutation pi = identity_permutation(layout);
    std::vector<std::size_t> pick(K, 0);
    const auto apply = [&](int k) {
        const auto& lp = locals[k][pick[k]];
        const int off = layout.offset(k);
        for (int i = 0; i < layout.size(k); ++i)
            pi.images[off + i] = off + lp[i];
    };
    for (int k = 0; k < K; ++k) apply(k);

    for (;;) {
        fn(pi);
        int k = 0;
        for (; k < K; ++k) {
            if (++pick[k] < locals[k].size()) {
                apply(k);
                break;
            }
            pick[k] = 0;
            apply(k);
        }
        if (k == K) return;
    }
}

namespace {

// Standardize when possible so residual tolerances act on a unit scale;
// degenerate matrices fall back to plain centering (statistic identically 0).
StratifiedMatrix normalize_for_checks(const StratifiedMatrix& a) {
    try {
        return transform(a, Transform::standardize);
    } catch (const DegenerateVariance&) {
        return transform(a, Transform::center);
    }
}

std::size_t atom_index(const std::vector<double>& atoms, double v, double atol) {
    auto it = std::lower_bound(atoms.begin(), atoms.end(), v - atol);
    if (it == atoms.end() || std::abs(*it - v) > atol)
        throw InvariantViolation("value does not match any enumerated atom");
    return static_cast<std::size_t>(it - atoms.begin());
}

} // namespace

VerifyReport verify_stein_pair(const StratifiedMatrix& a, double linearity_tol,
                               double variance_tol, std::uint64_t budget) {
    const StratumLayout& L = a.layout();
    const int K = L.num_strata(), n = L.total();
    if (n == K)
        throw DegenerateLayout("all strata are singletons; no transposition exists");
    std::uint64_t pair_count = 0;
    for (int k = 0; k < K; ++k)
        pair_count += static_cast<std::uint64_t>(L.size(k)) * (L.size(k) - 1);
    check_budget(L, budget, std::max<std::uint64_t>(pair_count, 1));

    const StratifiedMatrix as = normalize_for_checks(a);
    const double sigma2 = moments(as).variance;
    const double lambda = 2.0 / (n - K);

    const ExactDistribution watoms = enumerate_distribution(as, budget);
    const double atol = 1e-9 * std::max(1.0, std::abs(watoms.values.back()));

    // Integer weights: P(pi, k, i, j) = 1 / (prod n! * (n-K) * n_k); scale by
    // L_lcm = lcm(n_k) so every outcome carries the integer L_lcm / n_k.
    std::uint64_t lcm_nk = 1;
    for (int k = 0; k < K; ++k)
        lcm_nk = std::lcm(lcm_nk, static_cast<std::uint64_t>(L.size(k)));

    double max_linearity = 0.0;
    NeumaierSum var_acc; // E (W - W'')^2 accumulated over all outcomes
    std::map<std::pair<std::size_t, std::size_t>, std::uint64_t> joint;

    StratifiedPermutation pi2 = identity_permutation(L);
    for_each_permutation(L, budget, [&](const StratifiedPermutation& pi) {
        const double w = statistic(as, pi);
        const std::size_t wi = atom_index(watoms.values, w, atol);
        NeumaierSum cond; // E[W'' | pi]
        for (int k = 0; k < K; ++k) {
            const int nk = L.size(k), off = L.offset(k);
            if (nk < 2) continue;
            const double outcome_prob = 1.0 / (static_cast<double>(n - K) * nk);
            const std::uint64_t outcome_weight = lcm_nk / static_cast<std::uint64_t>(nk);
            for (int i = off; i < off + nk; ++i) {
                for (int j = off; j < off + nk; ++j) {
                    if (i == j) continue;
                    pi2 = pi;
                    std::swap(pi2.images[i], pi2.images[j]);
                    const double w2 = statistic(as, pi2);
                    cond.add(outcome_prob * w2);
                    var_acc.add(outcome_prob * (w - w2) * (w - w2));
                    joint[{wi, atom_index(watoms.values, w2, atol)}] += outcome_weight;
                }
            }
        }
        max_linearity = std::max(max_linearity, std::abs(cond.value() - (1.0 - lambda) * w));
    });

    const auto denom = static_cast<double>(count_permutations(L));
    const double var_diff = var_acc.value() / denom;
    const double var_target = 4.0 * sigma2 / (n - K);

    double exch_violation = 0.0;
    for (const auto& [key, count] : joint) {
        auto mirrored = joint.find({key.second, key.first});
        const std::uint64_t other = mirrored == joint.end() ? 0 : mirrored->second;
        exch_violation = std::max(
            exch_violation, std::abs(static_cast<double>(count) - static_cast<double>(other)));
    }

    VerifyReport rep;
    rep.budget_used = count_permutations(L) * pair_count;
    rep.checks.push_back({"conditional_linearity", max_linearity, max_linearity <= linearity_tol});
    rep.checks.push_back({"difference_variance", std::abs(var_diff - var_target),
                          std::abs(var_diff - var_target) <= variance_tol});
    rep.checks.push_back({"joint_exchangeability", exch_violation, exch_violation == 0.0});
    return rep;
}

VerifyReport verify_zero_bias(const StratifiedMatrix& a, int degree, double tol,
                              std::uint64_t budget) {
    if (degree < 1 || degree > 3)
        throw DomainError("zero-bias check supports f(x) = x^d for d in {1,2,3}");
    const StratumLayout& L = a.layout();
    const int K = L.num_strata();
    std::uint64_t tuple_count = 0;
    for (int k = 0; k < K; ++k) {
        const auto nk = static_cast<std::uint64_t>(L.size(k));
        tuple_count += nk * nk * nk * nk;
    }
    check_budget(L, budget, std::max<std::uint64_t>(tuple_count, 1));

    const StratifiedMatrix as = transform(a, Transform::standardize);
    const MomentReport mom = moments(as); // variance exactly 1 by construction

    // Per-stratum mass denominators 4 n_k^2 (n_k - 1) sigma^2_[k] and the
    // normalization check.
    std::vector<double> mass_denom(K, 0.0);
    double norm_violation = 0.0;
    for (int k = 0; k < K; ++k) {
        const int nk = L.size(k);
        if (mom.stratum_variance[k] <= 0.0) continue;
        mass_denom[k] = 4.0 * static_cast<double>(nk) * nk * (nk - 1) * mom.stratum_variance[k];
        NeumaierSum total;
        for (int i = 0; i < nk; ++i)
            for (int j = 0; j < nk; ++j)
                for (int p = 0; p < nk; ++p)
                    for (int q = 0; q < nk; ++q) {
                        const double d = as.at(k, i, p) + as.at(k, j, q) - as.at(k, i, q) -
                                         as.at(k, j, p);
                        total.add(d * d / mass_denom[k]);
                    }
        norm_violation = std::max(norm_violation, std::abs(total.value() - 1.0));
    }

    // E_U f'(u a + (1-u) b) = (f(a) - f(b)) / (a - b) = sum_t a^t b^{d-1-t}.
    const auto u_integral = [degree](double x, double y) {
        switch (degree) {
        case 1: return 1.0;
        case 2: return x + y;
        default: return x * x + x * y + y * y;
        }
    };

    NeumaierSum lhs_acc; // E[W f(W)] = E[W^{d+1}]
    NeumaierSum rhs_acc; // E f'(W*), scaled by var(W) = 1
    for_each_permutation(L, budget, [&](const StratifiedPermutation& pi) {
        const double w = statistic(as, pi);
        double w_pow = w; // w^{degree+1} = W f(W)
        for (int t = 0; t < degree; ++t) w_pow *= w;
        lhs_acc.add(w_pow);
        NeumaierSum per_pi;
        for (int k = 0; k < K; ++k) {
            if (mom.stratum_variance[k] <= 0.0) continue; // never drawn
            const int nk = L.size(k), off = L.offset(k);
            const double select = mom.variance_share[k]; // P(B-dagger = k)
            for (int i = off; i < off + nk; ++i)
                for (int j = off; j < off + nk; ++j) {
                    if (i == j) continue;
                    for (int p = off; p < off + nk; ++p)
                        for (int q = off; q < off + nk; ++q) {
                            if (p == q) continue;
                            const int li = i - off, lj = j - off, lp = p - off, lq = q - off;
                            const double d = as.at(k, li, lp) + as.at(k, lj, lq) -
                                             as.at(k, li, lq) - as.at(k, lj, lp);
                            if (d == 0.0) continue;
                            const double mass = d * d / mass_denom[k];
                            StratifiedPermutation dag = rearranged_permutation(pi, i, j, p, q);
                            const double wd = statistic(as, dag);
                            std::swap(dag.images[i], dag.images[j]);
                            const double wdd = statistic(as, dag);
                            per_pi.add(select * mass * u_integral(wd, wdd));
                        }
                }
        }
        rhs_acc.add(per_pi.value());
    });

    const auto denom = static_cast<double>(count_permutations(L));
    const double lhs = lhs_acc.value() / denom;
    const double rhs = rhs_acc.value() / denom;
    const double gap = std::abs(lhs - rhs);

    VerifyReport rep;
    rep.budget_used = count_permutations(L) * tuple_count;
    rep.checks.push_back({"four_index_mass_normalization", norm_violation, norm_violation <= 1e-12});
    rep.checks.push_back({"zero_bias_identity_x^" + std::to_string(degree), gap, gap <= tol});
    return rep;
}

VerifyReport verify_pi_dagger(const StratifiedMatrix& a, std::uint64_t budget) {
    const StratumLayout& L = a.layout();
    const int K = L.num_strata();
    const StratifiedMatrix a0 = transform(a, Transform::center);
    const MomentReport mom = moments(a0);

    double off_support = 0.0, image_pair = 0.0, bijection = 0.0, uniformity = 0.0;
    std::uint64_t used = 0;

    for (int k = 0; k < K; ++k) {
        if (mom.stratum_variance[k] <= 0.0) continue;
        const int nk = L.size(k), off = L.offset(k);
        const std::uint64_t stratum_perms = count_permutations(StratumLayout({nk}));
        // Budget: per positive-mass tuple we enumerate the stratum's
        // permutations; other strata stay at the identity since pi-dagger
        // never touches them.
        std::vector<int> local(nk);

        for (int i = off; i < off + nk; ++i)
            for (int j = off; j < off + nk; ++j) {
                if (i == j) continue;
                for (int p = off; p < off + nk; ++p)
                    for (int q = off; q < off + nk; ++q) {
                        if (p == q) continue;
                        const double d = a0.at(k, i - off, p - off) + a0.at(k, j - off, q - off) -
                                         a0.at(k, i - off, q - off) - a0.at(k, j - off, p - off);
                        if (d == 0.0) continue; // zero mass; not a coupling outcome
                        used += stratum_perms;
                        if (used > budget)
                            throw BudgetExceeded("pi-dagger enumeration exceeds budget");

                        std::map<std::vector<int>, std::uint64_t> completions;
                        StratifiedPermutation pi = identity_permutation(L);
                        std::iota(local.begin(), local.end(), 0);
                        do {
                            for (int m = 0; m < nk; ++m) pi.images[off + m] = off + local[m];
                            const StratifiedPermutation dag =
                                rearranged_permutation(pi, i, j, p, q);

                            // Untouched positions keep their images.
                            int p_pre = -1, q_pre = -1;
                            for (int m = off; m < off + nk; ++m) {
                                if (pi.images[m] == p) p_pre = m;
                                if (pi.images[m] == q) q_pre = m;
                            }
                            for (int m = off; m < off + nk; ++m) {
                                if (m == i || m == j || m == p_pre || m == q_pre) continue;
                                if (dag.images[m] != pi.images[m]) off_support += 1.0;
                            }
                            const int di = dag.images[i], dj = dag.images[j];
                            if (!((di == p && dj == q) || (di == q && dj == p)))
                                image_pair += 1.0;
                            std::vector<int> sorted(dag.images.begin() + off,
                                                    dag.images.begin() + off + nk);
                            std::sort(sorted.begin(), sorted.end());
                            for (int m = 0; m < nk; ++m)
                                if (sorted[m] != off + m) {
                                    bijection += 1.0;
                                    break;
                                }

                            std::vector<int> rest;
                            rest.reserve(nk - 2);
                            for (int m = off; m < off + nk; ++m)
                                if (m != i && m != j) rest.push_back(dag.images[m]);
                            ++completions[rest];
                        } while (std::next_permutation(local.begin(), local.end()));

                        // Exactly uniform: every completion appears n_k(n_k-1)
                        // times, and all (n_k-2)! completions occur.
                        const std::uint64_t expect =
                            static_cast<std::uint64_t>(nk) * static_cast<std::uint64_t>(nk - 1);
                        std::uint64_t seen = 0;
                        for (const auto& [key, count] : completions) {
                            seen += count;
                            uniformity = std::max(
                                uniformity, std::abs(static_cast<double>(count) -
                                                     static_cast<double>(expect)));
                        }
                        if (seen != stratum_perms) uniformity = std::max(uniformity, 1.0);
                    }
            }
    }

    VerifyReport rep;
    rep.budget_used = used;
    rep.checks.push_back({"off_support_images_fixed", off_support, off_support == 0.0});
    rep.checks.push_back({"image_pair_equals_pq", image_pair, image_pair == 0.0});
    rep.checks.push_back({"bijection", bijection, bijection == 0.0});
    rep.checks.push_back({"conditional_uniformity", uniformity, uniformity == 0.0});
    return rep;
}

} // namespace stratperm
