#include <doctest.h>

#include <cmath>
#include <vector>

#include "stratperm/errors.hpp"
#include "stratperm/moments.hpp"
#include "stratperm/multivariate.hpp"
#include "stratperm/rng.hpp"

using namespace stratperm;

namespace {

StratifiedMatrix noise_matrix(const StratumLayout& L, RandomSource& rng) {
    std::vector<std::vector<double>> blocks;
    for (int k = 0; k < L.num_strata(); ++k) {
        std::vector<double> b(static_cast<std::size_t>(L.size(k)) * L.size(k));
        for (auto& v : b) v = rng.normal();
        blocks.push_back(std::move(b));
    }
    return StratifiedMatrix(L, std::move(blocks));
}

MultiStatistic random_multi(const StratumLayout& L, int H, std::uint64_t seed) {
    RandomSource rng(seed);
    std::vector<StratifiedMatrix> comps;
    for (int h = 0; h < H; ++h) comps.push_back(noise_matrix(L, rng));
    return make_multi_statistic(std::move(comps));
}

} // namespace

TEST_SUITE("multivariate") {

TEST_CASE("component bundles must share a layout") {
    StratumLayout L({3, 2});
    RandomSource rng(1);
    auto g = noise_matrix(L, rng);
    auto h = noise_matrix(StratumLayout({5}), rng);
    CHECK_THROWS_AS(make_multi_statistic({g, h}), LayoutMismatch);
    CHECK_THROWS_AS(make_multi_statistic({}), DegenerateLayout);
    auto m = make_multi_statistic({g, g});
    CHECK(m.layout == L);
    CHECK(m.components.size() == 2);
}

TEST_CASE("stratified inner product by hand") {
    StratifiedMatrix g(StratumLayout({2}), {{1, 2, 3, 4}});
    StratifiedMatrix h(StratumLayout({2}), {{1, 0, 0, 2}});
    CHECK(inner_product_K(g, h) == doctest::Approx(9.0));  // (1 + 8) / (2 - 1)

    // singleton strata carry no randomness and are skipped
    StratifiedMatrix g2(StratumLayout({2, 1}), {{1, 2, 3, 4}, {100}});
    StratifiedMatrix h2(StratumLayout({2, 1}), {{1, 0, 0, 2}, {50}});
    CHECK(inner_product_K(g2, h2) == doctest::Approx(9.0));

    CHECK_THROWS_AS(inner_product_K(g, h2), LayoutMismatch);
}

TEST_CASE("inner product is symmetric and bilinear") {
    StratumLayout L({4, 3});
    RandomSource rng(2);
    auto g = noise_matrix(L, rng), h = noise_matrix(L, rng), w = noise_matrix(L, rng);
    CHECK(inner_product_K(g, h) == doctest::Approx(inner_product_K(h, g)).epsilon(1e-13));
    auto gh = g;
    for (int k = 0; k < 2; ++k)
        for (std::size_t i = 0; i < gh.block(k).size(); ++i)
            gh.block(k)[i] = 2.0 * g.block(k)[i] + 3.0 * h.block(k)[i];
    CHECK(inner_product_K(gh, w) ==
          doctest::Approx(2.0 * inner_product_K(g, w) + 3.0 * inner_product_K(h, w))
              .epsilon(1e-12));
}

TEST_CASE("inner product of a centered matrix with itself is the variance") {
    StratumLayout L({5, 4});
    RandomSource rng(3);
    auto g = noise_matrix(L, rng);
    auto c = transform(g, Transform::center);
    CHECK(inner_product_K(c, c) == doctest::Approx(moments(g).variance).epsilon(1e-12));
}

TEST_CASE("standardization yields centered components with an identity Gram") {
    StratumLayout L({6, 5});
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto m = random_multi(L, 3, 40 + seed);
        auto s = standardize_multi(m);
        REQUIRE(s.components.size() == 3);
        for (int h = 0; h < 3; ++h) {
            auto cen = transform(s.components[h], Transform::center);
            for (int k = 0; k < 2; ++k)
                for (std::size_t i = 0; i < cen.block(k).size(); ++i)
                    CHECK(std::abs(s.components[h].block(k)[i] - cen.block(k)[i]) < 1e-10);
            for (int l = 0; l < 3; ++l) {
                double want = h == l ? 1.0 : 0.0;
                CHECK(std::abs(inner_product_K(s.components[h], s.components[l]) - want) <
                      1e-10);
            }
        }
    }
}

TEST_CASE("duplicated components make the Gram matrix singular") {
    StratumLayout L({4, 4});
    RandomSource rng(4);
    auto g = noise_matrix(L, rng);
    CHECK_THROWS_AS(standardize_multi(make_multi_statistic({g, g})), SingularCovariance);
    // near-duplicates trip the relative eigenvalue floor as well
    auto h = g;
    h.at(0, 0, 0) += 1e-9;
    CHECK_THROWS_AS(standardize_multi(make_multi_statistic({g, h})), SingularCovariance);
}

TEST_CASE("linear-combination rate demands a standardized bundle") {
    StratumLayout L({4, 3});
    auto raw = random_multi(L, 2, 5);
    std::vector<double> b = {1.0, 0.0};
    CHECK_THROWS_AS(rate_linear_combination(raw, b), NotStandardized);
    auto s = standardize_multi(raw);
    CHECK_NOTHROW(rate_linear_combination(s, b));
}

TEST_CASE("linear-combination rate is the sup entry of the mixed matrix") {
    StratumLayout L({5, 4});
    auto s = standardize_multi(random_multi(L, 3, 6));
    std::vector<double> b = {2.0 / 7.0, 3.0 / 7.0, 6.0 / 7.0};  // unit norm
    auto rep = rate_linear_combination(s, b);
    CHECK(rep.method == "linear_combination");
    double manual = 0.0;
    for (int k = 0; k < 2; ++k)
        for (std::size_t i = 0; i < s.components[0].block(k).size(); ++i) {
            double v = 0.0;
            for (int h = 0; h < 3; ++h) v += b[h] * s.components[h].block(k)[i];
            manual = std::max(manual, std::abs(v));
        }
    CHECK(rep.rate_quantity == doctest::Approx(manual).epsilon(1e-13));
    CHECK(rep.regime == "general");  // strata of size 5 and 4 are below the theta floor

    // negating the direction cannot change the sup of absolute values
    std::vector<double> nb = {-b[0], -b[1], -b[2]};
    CHECK(rate_linear_combination(s, nb).rate_quantity ==
          doctest::Approx(rep.rate_quantity).epsilon(1e-13));
}

TEST_CASE("basis directions recover per-component sups") {
    StratumLayout L({6});
    auto s = standardize_multi(random_multi(L, 2, 7));
    std::vector<double> e0 = {1.0, 0.0};
    auto rep = rate_linear_combination(s, e0);
    double manual = 0.0;
    for (double v : s.components[0].block(0)) manual = std::max(manual, std::abs(v));
    CHECK(rep.rate_quantity == doctest::Approx(manual).epsilon(1e-13));
}

TEST_CASE("combination vector validation") {
    StratumLayout L({4});
    auto s = standardize_multi(random_multi(L, 2, 8));
    std::vector<double> wrong_len = {1.0};
    CHECK_THROWS_AS(rate_linear_combination(s, wrong_len), LayoutMismatch);
    std::vector<double> not_unit = {1.0, 1.0};
    CHECK_THROWS_AS(rate_linear_combination(s, not_unit), DomainError);
}

TEST_CASE("convex-set rate at pinned arguments") {
    CHECK(rate_convex_sets(1, 0.5, 2, 1) == doctest::Approx(1.8535533905932737).epsilon(1e-13));
    CHECK(rate_convex_sets(3, 0.1, 100, 4) == doctest::Approx(19.028791109391467).epsilon(1e-13));
    CHECK(rate_convex_sets(1, 0.0, 10, 2) == 0.0);
}

TEST_CASE("convex-set rate decays along the balanced-entry path") {
    // with B = 1/sqrt(n) the four terms all shrink as n grows
    double prev = 1e300;
    for (std::int64_t n : {16, 64, 256, 1024, 4096}) {
        double v = rate_convex_sets(2, 1.0 / std::sqrt(double(n)), n, 4);
        CHECK(v < prev);
        prev = v;
    }
}

TEST_CASE("convex-set rate grows with the dimension") {
    double lo = rate_convex_sets(1, 0.05, 200, 2);
    double hi = rate_convex_sets(5, 0.05, 200, 2);
    CHECK(hi > lo);
}

TEST_CASE("convex-set rate validation") {
    CHECK_THROWS_AS(rate_convex_sets(0, 0.5, 10, 1), DomainError);
    CHECK_THROWS_AS(rate_convex_sets(1, 0.5, 10, 0), DomainError);
    CHECK_THROWS_AS(rate_convex_sets(1, 0.5, 3, 3), DomainError);
    CHECK_THROWS_AS(rate_convex_sets(1, -0.5, 10, 1), DomainError);
}

} // TEST_SUITE
