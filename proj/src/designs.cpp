#include "stratperm/designs.hpp"

#include <cmath>
#include <string>

#include "stratperm/errors.hpp"
#include "stratperm/moments.hpp"

namespace stratperm {

namespace {

std::vector<double> resolve_weights(const StratumLayout& L, const std::vector<double>& w) {
    const int K = L.num_strata();
    if (w.empty()) {
        std::vector<double> out(K);
        for (int k = 0; k < K; ++k)
            out[k] = static_cast<double>(L.size(k)) / L.total();
        return out;
    }
    if (static_cast<int>(w.size()) != K)
        throw LayoutMismatch("need one weight per stratum");
    for (double v : w)
        if (!(std::isfinite(v) && v > 0.0))
            throw DomainError("stratum weights must be positive and finite");
    return w;
}

void check_outcomes(const StratumLayout& L, const std::vector<double>& y, const char* what) {
    if (static_cast<int>(y.size()) != L.total())
        throw LayoutMismatch(std::string(what) + " must have one entry per unit");
    for (double v : y)
        if (!std::isfinite(v))
            throw DomainError(std::string(what) + " must be finite");
}

void check_counts(const StratumLayout& L, const std::vector<int>& n1, bool need_control) {
    if (static_cast<int>(n1.size()) != L.num_strata())
        throw LayoutMismatch("need one group size per stratum");
    for (int k = 0; k < L.num_strata(); ++k) {
        const int hi = L.size(k) - (need_control ? 1 : 0);
        if (n1[k] < 1 || n1[k] > hi)
            throw DomainError("group size out of range in stratum " + std::to_string(k));
    }
}

// Sample variance (n_k - 1 denominator) of a block slice; 0 for singletons.
double block_s2(std::span<const double> y, int off, int nk) {
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

// (1/n_k) sum_i |y_i - ybar|^3 over a block slice.
double block_m3(std::span<const double> y, int off, int nk) {
    NeumaierSum s;
    for (int i = 0; i < nk; ++i) s.add(y[off + i]);
    const double ybar = s.value() / nk;
    NeumaierSum q;
    for (int i = 0; i < nk; ++i) {
        const double d = y[off + i] - ybar;
        q.add(std::abs(d) * d * d);
    }
    return q.value() / nk;
}

// Sum of z within each stratum, with z validated as binary.
std::vector<int> stratum_counts(const StratumLayout& L, std::span<const int> z) {
    if (static_cast<int>(z.size()) != L.total())
        throw LayoutMismatch("assignment vector must have one entry per unit");
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

} // namespace

std::vector<double> design_weights(const SamplingDesign& d) {
    return resolve_weights(d.layout, d.weights);
}

std::vector<double> design_weights(const ExperimentDesign& d) {
    return resolve_weights(d.layout, d.weights);
}

StratifiedMatrix build_design_matrix(const SamplingDesign& d) {
    const StratumLayout& L = d.layout;
    check_outcomes(L, d.y, "outcomes");
    check_counts(L, d.sample_size, /*need_control=*/false);
    const std::vector<double> w = resolve_weights(L, d.weights);

    std::vector<std::vector<double>> blocks(L.num_strata());
    for (int k = 0; k < L.num_strata(); ++k) {
        const int nk = L.size(k), off = L.offset(k), n1 = d.sample_size[k];
        blocks[k].assign(static_cast<std::size_t>(nk) * nk, 0.0);
        for (int i = 0; i < nk; ++i) {
            const double v = w[k] * d.y[off + i] / n1;
            for (int j = 0; j < n1; ++j)
                blocks[k][static_cast<std::size_t>(i) * nk + j] = v;
        }
    }
    return StratifiedMatrix(L, std::move(blocks));
}

StratifiedMatrix build_design_matrix(const ExperimentDesign& d) {
    const StratumLayout& L = d.layout;
    check_outcomes(L, d.y1, "treated outcomes");
    check_outcomes(L, d.y0, "control outcomes");
    check_counts(L, d.treated, /*need_control=*/true);
    const std::vector<double> w = resolve_weights(L, d.weights);

    std::vector<std::vector<double>> blocks(L.num_strata());
    for (int k = 0; k < L.num_strata(); ++k) {
        const int nk = L.size(k), off = L.offset(k);
        const int n1 = d.treated[k], n0 = nk - n1;
        blocks[k].resize(static_cast<std::size_t>(nk) * nk);
        for (int i = 0; i < nk; ++i) {
            const double t = w[k] * d.y1[off + i] / n1;
            const double c = -w[k] * d.y0[off + i] / n0;
            for (int j = 0; j < nk; ++j)
                blocks[k][static_cast<std::size_t>(i) * nk + j] = j < n1 ? t : c;
        }
    }
    return StratifiedMatrix(L, std::move(blocks));
}

double design_variance(const SamplingDesign& d) {
    const StratumLayout& L = d.layout;
    check_outcomes(L, d.y, "outcomes");
    check_counts(L, d.sample_size, /*need_control=*/false);
    const std::vector<double> w = resolve_weights(L, d.weights);
    NeumaierSum v;
    for (int k = 0; k < L.num_strata(); ++k) {
        const int nk = L.size(k), n1 = d.sample_size[k];
        const double s2 = block_s2(d.y, L.offset(k), nk);
        v.add(w[k] * w[k] * (1.0 / n1 - 1.0 / nk) * s2);
    }
    return v.value();
}

double design_variance(const ExperimentDesign& d) {
    const StratumLayout& L = d.layout;
    check_outcomes(L, d.y1, "treated outcomes");
    check_outcomes(L, d.y0, "control outcomes");
    check_counts(L, d.treated, /*need_control=*/true);
    const std::vector<double> w = resolve_weights(L, d.weights);
    NeumaierSum v;
    for (int k = 0; k < L.num_strata(); ++k) {
        const int nk = L.size(k), off = L.offset(k);
        const int n1 = d.treated[k], n0 = nk - n1;
        const double s21 = block_s2(d.y1, off, nk);
        const double s20 = block_s2(d.y0, off, nk);
        std::vector<double> tau(nk);
        for (int i = 0; i < nk; ++i) tau[i] = d.y1[off + i] - d.y0[off + i];
        const double s2t = block_s2(tau, 0, nk);
        v.add(w[k] * w[k] * (s21 / n1 + s20 / n0 - s2t / nk));
    }
    return v.value();
}

double estimate(const SamplingDesign& d, std::span<const int> z) {
    const StratumLayout& L = d.layout;
    check_outcomes(L, d.y, "outcomes");
    check_counts(L, d.sample_size, /*need_control=*/false);
    const std::vector<double> w = resolve_weights(L, d.weights);
    const std::vector<int> c = stratum_counts(L, z);
    NeumaierSum est;
    for (int k = 0; k < L.num_strata(); ++k) {
        if (c[k] != d.sample_size[k])
            throw CountMismatch("stratum " + std::to_string(k) + " has " +
                                std::to_string(c[k]) + " sampled units, expected " +
                                std::to_string(d.sample_size[k]));
        NeumaierSum s;
        for (int i = 0; i < L.size(k); ++i)
            if (z[L.offset(k) + i]) s.add(d.y[L.offset(k) + i]);
        est.add(w[k] * s.value() / d.sample_size[k]);
    }
    return est.value();
}

double estimate(const ExperimentDesign& d, std::span<const int> z) {
    const StratumLayout& L = d.layout;
    check_outcomes(L, d.y1, "treated outcomes");
    check_outcomes(L, d.y0, "control outcomes");
    check_counts(L, d.treated, /*need_control=*/true);
    const std::vector<double> w = resolve_weights(L, d.weights);
    const std::vector<int> c = stratum_counts(L, z);
    NeumaierSum est;
    for (int k = 0; k < L.num_strata(); ++k) {
        const int nk = L.size(k), off = L.offset(k);
        const int n1 = d.treated[k], n0 = nk - n1;
        if (c[k] != n1)
            throw CountMismatch("stratum " + std::to_string(k) + " has " +
                                std::to_string(c[k]) + " treated units, expected " +
                                std::to_string(n1));
        NeumaierSum t, u;
        for (int i = 0; i < nk; ++i) {
            if (z[off + i])
                t.add(d.y1[off + i]);
            else
                u.add(d.y0[off + i]);
        }
        est.add(w[k] * (t.value() / n1 - u.value() / n0));
    }
    return est.value();
}

BoundReport rate_design(const SamplingDesign& d) {
    const StratumLayout& L = d.layout;
    const StratifiedMatrix a = build_design_matrix(d);
    const std::vector<double> w = resolve_weights(L, d.weights);
    const double var = design_variance(d);
    if (!(var > 0.0))
        throw DegenerateVariance("design has zero randomization variance");
    const double sigma3 = var * std::sqrt(var);

    NeumaierSum r;
    for (int k = 0; k < L.num_strata(); ++k) {
        const int n1 = d.sample_size[k];
        r.add(w[k] * w[k] * w[k] * block_m3(d.y, L.offset(k), L.size(k)) /
              (static_cast<double>(n1) * n1));
    }
    return assemble_rate_report(a, "design_sampling", r.value() / sigma3);
}

BoundReport rate_design(const ExperimentDesign& d) {
    const StratumLayout& L = d.layout;
    const StratifiedMatrix a = build_design_matrix(d);
    const std::vector<double> w = resolve_weights(L, d.weights);
    const double var = design_variance(d);
    if (!(var > 0.0))
        throw DegenerateVariance("design has zero randomization variance");
    const double sigma3 = var * std::sqrt(var);

    NeumaierSum r;
    for (int k = 0; k < L.num_strata(); ++k) {
        const int nk = L.size(k), off = L.offset(k);
        const double n1 = d.treated[k], n0 = nk - d.treated[k];
        r.add(w[k] * w[k] * w[k] *
              (block_m3(d.y1, off, nk) / (n1 * n1) + block_m3(d.y0, off, nk) / (n0 * n0)));
    }
    return assemble_rate_report(a, "design_experiment", r.value() / sigma3);
}

} // namespace stratperm
