#include "stratperm/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "stratperm/errors.hpp"
#include "stratperm/moments.hpp"
#include "stratperm/normal.hpp"
#include "stratperm/permutation.hpp"

namespace stratperm {

namespace {
constexpr int kBatches = 64;
} // namespace

SampleSummary simulate_statistic(const StratifiedMatrix& a, std::int64_t reps,
                                 const RandomSource& rng, int workers) {
    if (reps < 1) throw DomainError("simulation needs at least one draw");
    if (workers < 1) throw DomainError("worker count must be positive");

    // Batch b draws quota(b) values from sub-stream b; offsets are fixed up
    // front so threads write disjoint ranges.
    std::int64_t offsets[kBatches + 1];
    offsets[0] = 0;
    for (int b = 0; b < kBatches; ++b)
        offsets[b + 1] = offsets[b] + reps / kBatches + (b < reps % kBatches ? 1 : 0);

    SampleSummary out;
    out.count = reps;
    out.draws.resize(static_cast<std::size_t>(reps));

    std::atomic<int> next{0};
    const auto run_batches = [&]() {
        StratifiedPermutation pi = identity_permutation(a.layout());
        for (;;) {
            const int b = next.fetch_add(1);
            if (b >= kBatches) return;
            RandomSource rs = rng.substream(static_cast<std::uint64_t>(b));
            for (std::int64_t t = offsets[b]; t < offsets[b + 1]; ++t) {
                sample_permutation_into(pi, rs);
                out.draws[static_cast<std::size_t>(t)] = statistic(a, pi);
            }
        }
    };

    const int t = static_cast<int>(std::min<std::int64_t>({workers, kBatches, reps}));
    if (t <= 1) {
        run_batches();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(t));
        for (int i = 0; i < t; ++i) pool.emplace_back(run_batches);
        for (auto& th : pool) th.join();
    }

    std::sort(out.draws.begin(), out.draws.end());
    NeumaierSum mean;
    for (double v : out.draws) mean.add(v);
    out.mean = mean.value() / static_cast<double>(reps);
    if (reps > 1) {
        NeumaierSum ss;
        for (double v : out.draws) ss.add((v - out.mean) * (v - out.mean));
        out.variance = ss.value() / static_cast<double>(reps - 1);
    }
    return out;
}

namespace {

std::vector<double> ecdf_levels(const SampleSummary& s) {
    if (s.draws.empty()) throw DomainError("summary holds no draws");
    std::vector<double> cum(s.draws.size());
    const auto m = static_cast<double>(s.draws.size());
    for (std::size_t i = 0; i < cum.size(); ++i) cum[i] = static_cast<double>(i + 1) / m;
    return cum;
}

} // namespace

double ecdf_kolmogorov_vs_normal(const SampleSummary& s) {
    return kolmogorov_to_std_normal(s.draws, ecdf_levels(s));
}

double empirical_wasserstein_vs_normal(const SampleSummary& s) {
    return wasserstein_to_std_normal(s.draws, ecdf_levels(s));
}

double kolmogorov_mc_allowance(std::int64_t m) {
    if (m < 1) throw DomainError("allowance needs a positive sample size");
    // sqrt(log(2/alpha)/(2m)) with alpha = 0.0027.
    return std::sqrt(6.6077 / 2.0 / static_cast<double>(m));
}

double wasserstein_mc_allowance(std::int64_t m) {
    if (m < 1) throw DomainError("allowance needs a positive sample size");
    return 4.0 * 1.6147438518 / std::sqrt(static_cast<double>(m));
}

} // namespace stratperm
