#include "stratperm/post_stratified.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>

#include "stratperm/errors.hpp"
#include "stratperm/moments.hpp"
#include "stratperm/normal.hpp"

namespace stratperm {

namespace {

void check_finite(const std::vector<double>& v, const char* what) {
    for (double x : v)
        if (!std::isfinite(x))
            throw DomainError(std::string(what) + " must be finite");
}

// Sample variance (n-1 denominator) of a grouped slice; 0 for singletons.
double slice_s2(std::span<const double> y, int off, int nk) {
    if (nk < 2) return 0.0;
    NeumaierSum s;
    for (int i = 0; i < nk; ++i) s.add(y[off + i]);
    const double ybar = s.value() / nk;
    NeumaierSum q;
    for (int i = 0; i < nk; ++i) {
        const double d = y[off + i] - ybar;
        q.add(d * d);
    }
    return q.value() / (nk - 1);
}

struct MixtureCell {
    std::int64_t count = 0;
    double sigma_u = 0.0; // conditional sd given this U
};

// E{Phi(sigma t / sigma(U)) | event} across accepted draws; sigma(U) = 0
// contributes the degenerate limit 1(t > 0) + 0.5 * 1(t = 0).
double mixture_cdf(double t, double sigma,
                   const std::map<std::vector<int>, MixtureCell>& cells,
                   std::int64_t accepted) {
    NeumaierSum s;
    for (const auto& [u, cell] : cells) {
        double phi;
        if (cell.sigma_u > 0.0)
            phi = normal_cdf(sigma * t / cell.sigma_u);
        else
            phi = t > 0.0 ? 1.0 : (t == 0.0 ? 0.5 : 0.0);
        s.add(static_cast<double>(cell.count) * phi);
    }
    return s.value() / static_cast<double>(accepted);
}

double mixture_discrepancy_sup(double sigma,
                               const std::map<std::vector<int>, MixtureCell>& cells,
                               std::int64_t accepted) {
    const auto gap = [&](double t) {
        return std::abs(mixture_cdf(t, sigma, cells, accepted) - normal_cdf(t));
    };

    constexpr int kGrid = 2001;
    constexpr double kLo = -8.0, kHi = 8.0;
    double best = 0.0;
    int best_i = 0;
    for (int i = 0; i < kGrid; ++i) {
        const double t = kLo + (kHi - kLo) * i / (kGrid - 1);
        const double g = gap(t);
        if (g > best) {
            best = g;
            best_i = i;
        }
    }

    // Golden-section refinement between the grid neighbors of the maximum.
    const double step = (kHi - kLo) / (kGrid - 1);
    double a = kLo + step * std::max(best_i - 1, 0);
    double b = kLo + step * std::min(best_i + 1, kGrid - 1);
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - invphi * (b - a), d = a + invphi * (b - a);
    double fc = gap(c), fd = gap(d);
    while (b - a > 1e-12) {
        if (fc < fd) {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = gap(d);
        } else {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = gap(c);
        }
    }
    return std::max({best, fc, fd});
}

} // namespace

PostStratFrame group_population(const PostStratSpec& spec, const PostStratPopulation& pop) {
    const int n = static_cast<int>(spec.covariate.size());
    if (n == 0)
        throw DegenerateLayout("population is empty");
    if (static_cast<int>(pop.y.size()) != n)
        throw LayoutMismatch("outcomes must have one entry per unit");
    const bool experiment = spec.kind == DesignKind::experiment;
    if (experiment && static_cast<int>(pop.y0.size()) != n)
        throw LayoutMismatch("control outcomes must have one entry per unit");
    if (!experiment && !pop.y0.empty())
        throw LayoutMismatch("sampling populations carry a single outcome vector");
    check_finite(pop.y, "outcomes");
    check_finite(pop.y0, "control outcomes");

    int levels = 0;
    for (int c : spec.covariate) {
        if (c < 0)
            throw DomainError("covariate levels must be non-negative");
        levels = std::max(levels, c + 1);
    }
    std::vector<int> sizes(levels, 0);
    for (int c : spec.covariate) ++sizes[c];
    for (int k = 0; k < levels; ++k)
        if (sizes[k] == 0)
            throw DegenerateLayout("covariate level " + std::to_string(k) + " has no units");

    PostStratFrame frame;
    frame.layout = StratumLayout(sizes);
    frame.order.resize(n);
    frame.y.resize(n);
    if (experiment) frame.y0.resize(n);
    std::vector<int> cursor(levels);
    for (int k = 0; k < levels; ++k) cursor[k] = frame.layout.offset(k);
    for (int i = 0; i < n; ++i) {
        const int p = cursor[spec.covariate[i]]++;
        frame.order[p] = i;
        frame.y[p] = pop.y[i];
        if (experiment) frame.y0[p] = pop.y0[i];
    }
    frame.weights.resize(levels);
    for (int k = 0; k < levels; ++k)
        frame.weights[k] = static_cast<double>(sizes[k]) / n;
    return frame;
}

SamplingDesign conditional_sampling_design(const PostStratFrame& frame,
                                           const std::vector<int>& u) {
    return SamplingDesign{frame.layout, frame.y, u, frame.weights};
}

ExperimentDesign conditional_experiment_design(const PostStratFrame& frame,
                                               const std::vector<int>& u) {
    return ExperimentDesign{frame.layout, frame.y, frame.y0, u, frame.weights};
}

PostStratReport simulate_post_stratified(const PostStratSpec& spec,
                                         const PostStratPopulation& pop,
                                         std::int64_t reps, const RandomSource& rng,
                                         std::int64_t retry_cap) {
    if (reps < 1)
        throw DomainError("need at least one replication");
    if (retry_cap < 1)
        throw DomainError("retry cap must be positive");

    const PostStratFrame frame = group_population(spec, pop);
    const StratumLayout& L = frame.layout;
    const int K = L.num_strata(), n = L.total(), n1 = spec.draw_size;
    const bool experiment = spec.kind == DesignKind::experiment;

    if (n1 < 1 || n1 > n)
        throw DomainError("draw size must lie in [1, n]");
    if (n1 < K)
        throw EventUnreachable("a draw of size " + std::to_string(n1) +
                               " cannot hit all " + std::to_string(K) + " strata");
    if (experiment) {
        if (n - n1 < K)
            throw EventUnreachable("too few control units to hit all strata");
        if (L.min_size() < 2)
            throw EventUnreachable("singleton stratum cannot hold both arms");
    }

    // Per-stratum population moments; for experiments y holds Y(1).
    std::vector<double> s2(K), s20(K), s2t(K), m3(K), m30(K);
    for (int k = 0; k < K; ++k) {
        const int nk = L.size(k), off = L.offset(k);
        s2[k] = slice_s2(frame.y, off, nk);
        m3[k] = finite_pop_moment(std::span(frame.y).subspan(off, nk), 3.0);
        if (experiment) {
            s20[k] = slice_s2(frame.y0, off, nk);
            m30[k] = finite_pop_moment(std::span(frame.y0).subspan(off, nk), 3.0);
            std::vector<double> tau(nk);
            for (int i = 0; i < nk; ++i) tau[i] = frame.y[off + i] - frame.y0[off + i];
            s2t[k] = slice_s2(tau, 0, nk);
        }
    }

    PostStratReport rep;
    rep.kind = spec.kind;
    rep.requested = reps;

    RandomSource stream = rng.substream(0);
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<int> u(K);
    std::vector<double> tsum(K), csum(K);
    std::vector<double> estimates;
    estimates.reserve(static_cast<std::size_t>(reps));
    NeumaierSum sig2_sum;
    std::vector<NeumaierSum> plug(K), plug_t(K), plug_c(K);
    std::map<std::vector<int>, MixtureCell> cells;

    while (rep.accepted < reps) {
        if (rep.attempted == retry_cap) {
            if (rep.accepted == 0)
                throw EventUnreachable("no draw satisfied the conditioning event within " +
                                       std::to_string(retry_cap) + " attempts");
            throw BudgetExceeded("retry cap hit after " + std::to_string(rep.accepted) +
                                 " of " + std::to_string(reps) + " accepted draws");
        }
        ++rep.attempted;

        // Partial Fisher-Yates: idx[0..n1) is a uniform size-n1 subset.
        for (int i = 0; i < n1; ++i) {
            const int j = i + static_cast<int>(stream.uniform_below(
                                  static_cast<std::uint64_t>(n - i)));
            std::swap(idx[i], idx[j]);
        }
        std::fill(u.begin(), u.end(), 0);
        for (int i = 0; i < n1; ++i) ++u[L.stratum_of(idx[i])];

        bool ok = true;
        for (int k = 0; k < K && ok; ++k)
            ok = u[k] >= 1 && (!experiment || u[k] <= L.size(k) - 1);
        if (!ok) continue;
        ++rep.accepted;

        std::fill(tsum.begin(), tsum.end(), 0.0);
        std::fill(csum.begin(), csum.end(), 0.0);
        for (int i = 0; i < n1; ++i) tsum[L.stratum_of(idx[i])] += frame.y[idx[i]];
        if (experiment)
            for (int i = n1; i < n; ++i) csum[L.stratum_of(idx[i])] += frame.y0[idx[i]];

        NeumaierSum est, sig2_u;
        for (int k = 0; k < K; ++k) {
            const double w = frame.weights[k];
            const int nk = L.size(k), uk = u[k];
            if (experiment) {
                est.add(w * (tsum[k] / uk - csum[k] / (nk - uk)));
                sig2_u.add(w * w * (s2[k] / uk + s20[k] / (nk - uk) - s2t[k] / nk));
            } else {
                est.add(w * tsum[k] / uk);
                sig2_u.add(w * w * (1.0 / uk - 1.0 / nk) * s2[k]);
            }
        }
        const double s2u = sig2_u.value();
        estimates.push_back(est.value());
        sig2_sum.add(s2u);
        for (int k = 0; k < K; ++k) {
            const double uk = u[k], vk = L.size(k) - u[k];
            if (experiment) {
                plug_t[k].add(1.0 / (uk * uk));
                plug_c[k].add(1.0 / (vk * vk));
            } else {
                plug[k].add(1.0 / (uk * uk * s2u * std::sqrt(s2u)));
            }
        }
        MixtureCell& cell = cells[u];
        ++cell.count;
        cell.sigma_u = std::sqrt(std::max(s2u, 0.0));
    }

    const double m = static_cast<double>(rep.accepted);
    rep.acceptance_rate = m / static_cast<double>(rep.attempted);
    rep.sigma2 = sig2_sum.value() / m;

    NeumaierSum es;
    for (double e : estimates) es.add(e);
    rep.estimate_mean = es.value() / m;
    if (rep.accepted >= 2) {
        NeumaierSum q;
        for (double e : estimates) {
            const double d = e - rep.estimate_mean;
            q.add(d * d);
        }
        rep.estimate_variance = q.value() / (m - 1.0);
    }

    NeumaierSum first;
    if (experiment) {
        rep.plug_in_treated.resize(K);
        rep.plug_in_control.resize(K);
        const double sigma3 = rep.sigma2 * std::sqrt(rep.sigma2);
        for (int k = 0; k < K; ++k) {
            rep.plug_in_treated[k] = plug_t[k].value() / m;
            rep.plug_in_control[k] = plug_c[k].value() / m;
            const double w = frame.weights[k];
            first.add(w * w * w *
                      (rep.plug_in_treated[k] * m3[k] + rep.plug_in_control[k] * m30[k]));
        }
        rep.rate_first_term = first.value() / sigma3;
    } else {
        rep.plug_in.resize(K);
        for (int k = 0; k < K; ++k) {
            rep.plug_in[k] = plug[k].value() / m;
            const double w = frame.weights[k];
            first.add(w * w * w * rep.plug_in[k] * m3[k]);
        }
        rep.rate_first_term = first.value();
    }

    rep.mixture_discrepancy =
        rep.sigma2 > 0.0
            ? mixture_discrepancy_sup(std::sqrt(rep.sigma2), cells, rep.accepted)
            : 0.0;

    const double p = static_cast<double>(n1) / n;
    if (experiment) {
        double min1 = std::numeric_limits<double>::infinity(), max1 = 0.0;
        double min0 = std::numeric_limits<double>::infinity(), max0 = 0.0;
        NeumaierSum s1w, s0w, stw;
        for (int k = 0; k < K; ++k) {
            min1 = std::min(min1, std::sqrt(s2[k]));
            max1 = std::max(max1, std::sqrt(s2[k]));
            min0 = std::min(min0, std::sqrt(s20[k]));
            max0 = std::max(max0, std::sqrt(s20[k]));
            s1w.add(frame.weights[k] * s2[k]);
            s0w.add(frame.weights[k] * s20[k]);
            stw.add(frame.weights[k] * s2t[k]);
        }
        const double lhs = (max1 > 0.0 ? min1 / max1 : 0.0) * s1w.value() / p +
                           (max0 > 0.0 ? min0 / max0 : 0.0) * s0w.value() / (1.0 - p);
        rep.p_condition_ok = lhs > stw.value();
    } else {
        double smin = std::numeric_limits<double>::infinity(), smax = 0.0;
        for (int k = 0; k < K; ++k) {
            smin = std::min(smin, std::sqrt(s2[k]));
            smax = std::max(smax, std::sqrt(s2[k]));
        }
        rep.p_condition_ok = smax > 0.0 && p < smin / smax;
    }

    return rep;
}

} // namespace stratperm
