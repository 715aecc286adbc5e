#include <doctest.h>

#include <algorithm>
#include <random>
#include <vector>

#include "pmlab/metrics.hpp"
#include "support.hpp"

using namespace pmlab;
using namespace pmlab::metrics;
using doctest::Approx;

TEST_CASE("effective spread examples") {
    CHECK(effective_spread({0.52, 0.50, 0.50, +1}) == Approx(4.0));
    CHECK(effective_spread({0.50, 0.50, 0.60, +1}) == 0.0);
    CHECK(effective_spread({0.50, 0.50, 0.60, -1}) == 0.0);
    CHECK(effective_spread({0.48, 0.50, 0.50, -1}) == Approx(4.0));
}

TEST_CASE("realized spread examples") {
    CHECK(realized_spread({0.52, 0.50, 0.53, +1}) == Approx(-2.0));
    CHECK(realized_spread({0.52, 0.50, 0.50, +1}) == effective_spread({0.52, 0.50, 0.50, +1}));
    const TradeObs rising{0.52, 0.50, 0.51, +1};
    CHECK(realized_spread(rising) < effective_spread(rising));
}

TEST_CASE("adverse selection examples") {
    CHECK(adverse_selection(4.0, 4.0) == 0.0);
    CHECK(adverse_selection(4.0, -2.0) == 6.0);
}

TEST_CASE("spread identities on random trades") {
    std::mt19937_64 rng(1);
    for (int i = 0; i < 1000; ++i) {
        const double m = testing::uniform(rng, 0.05, 0.95);
        const TradeObs o{m + testing::uniform(rng, -0.04, 0.04), m, m + testing::uniform(rng, -0.04, 0.04),
                         i % 2 ? 1 : -1};
        const double eff = effective_spread(o);
        const double rs = realized_spread(o);
        // adverse selection is the signed midpoint move, independent of the execution price
        const double oracle = 200.0 * o.sign * (o.future_midpoint - o.midpoint);
        CHECK(std::abs(adverse_selection(eff, rs) - oracle) < 1e-12);
        const TradeObs still{o.exec_price, o.midpoint, o.midpoint, o.sign};
        CHECK(realized_spread(still) == effective_spread(still));
    }
}

TEST_CASE("price impact examples") {
    CHECK(price_impact(0.5, 0.5, 1) == 0.0);
    CHECK(price_impact(0.50, 0.505, +1) == Approx(100.0));
    CHECK(price_impact(0.50, 0.495, -1) == Approx(100.0));
}

TEST_CASE("brier examples and range") {
    CHECK(brier(1.0, 1) == 0.0);
    CHECK(brier(0.5, 0) == 0.25);
    CHECK(brier(0.5, 1) == 0.25);
    std::mt19937_64 rng(2);
    for (int i = 0; i < 1000; ++i) {
        const double p = testing::uniform(rng, 0.0, 1.0);
        const double b = brier(p, i % 2);
        CHECK((b >= 0.0 && b <= 1.0));
    }
}

TEST_CASE("ece of perfectly calibrated data is zero") {
    std::vector<Forecast> f;
    // ten forecasts per bin centre, frequency equal to the centre
    for (int b = 0; b < 10; ++b) {
        const double centre = 0.05 + 0.1 * b;
        const int ones = b * 2 + 1;  // centre * 20
        for (int i = 0; i < 20; ++i) f.push_back({centre, i < ones ? 1 : 0});
    }
    const auto r = ece(f, 10);
    CHECK(r.ece == Approx(0.0).scale(1).epsilon(1e-12));
    CHECK(r.n == f.size());
}

TEST_CASE("ece of confidently wrong forecasts is one") {
    std::vector<Forecast> f(50, Forecast{1.0, 0});
    CHECK(ece(f, 10).ece == Approx(1.0));
    CHECK(ece(f, 10).mean_brier == Approx(1.0));
}

TEST_CASE("ece bins are count weighted and consistent") {
    std::mt19937_64 rng(3);
    std::vector<Forecast> f;
    for (int i = 0; i < 2000; ++i) {
        const double p = testing::uniform(rng, 0.0, 1.0);
        f.push_back({p, testing::uniform(rng, 0.0, 1.0) < p * p ? 1 : 0});
    }
    for (int n_bins : {2, 7, 10, 20}) {
        const auto r = ece(f, n_bins);
        REQUIRE(r.bins.size() == static_cast<std::size_t>(n_bins));
        REQUIRE(r.bin_edges.size() == static_cast<std::size_t>(n_bins + 1));
        // brute-force oracle: assign each forecast to floor(p * n_bins)
        std::vector<double> sp(n_bins), sy(n_bins), cnt(n_bins);
        for (const auto& x : f) {
            const int b = std::min(n_bins - 1, static_cast<int>(x.p * n_bins));
            sp[b] += x.p;
            sy[b] += x.y;
            cnt[b] += 1;
        }
        double oracle = 0.0;
        std::size_t total = 0;
        for (int b = 0; b < n_bins; ++b) {
            total += r.bins[b].count;
            if (cnt[b] > 0) oracle += cnt[b] / f.size() * std::abs(sp[b] / cnt[b] - sy[b] / cnt[b]);
        }
        CHECK(total == f.size());
        CHECK(r.ece == Approx(oracle).epsilon(1e-12));
        CHECK((r.ece >= 0.0 && r.ece <= 1.0));
    }
}

TEST_CASE("ece rejects bad input") {
    std::vector<Forecast> none;
    CHECK_THROWS_AS(ece(none, 10), MetricError);
    std::vector<Forecast> one{{0.5, 1}};
    CHECK_THROWS_AS(ece(one, 1), MetricError);
}

TEST_CASE("complementary gap") {
    CHECK(complementary_gap(0.6, 0.4) == Approx(0.0).scale(1));
    CHECK(complementary_gap(0.62, 0.41) == Approx(0.03));
    CHECK(complementary_gap(0.41, 0.62) == complementary_gap(0.62, 0.41));
}

TEST_CASE("simplex gap") {
    const std::vector<double> exact{0.2, 0.3, 0.5};
    CHECK(simplex_gap(exact) == Approx(0.0).scale(1));
    const std::vector<double> over{0.25, 0.35, 0.5};
    CHECK(simplex_gap(over) == Approx(0.10));
    const std::vector<double> single{0.5};
    CHECK_THROWS_AS(simplex_gap(single), MetricError);

    std::mt19937_64 rng(4);
    for (int i = 0; i < 200; ++i) {
        std::vector<double> v(2 + i % 5);
        for (auto& x : v) x = testing::uniform(rng, 0.01, 0.99);
        double sum = 0.0;
        for (double x : v) sum += x;
        const double g = simplex_gap(v);
        CHECK(g == Approx(std::abs(sum - 1.0)).epsilon(1e-12));
        std::shuffle(v.begin(), v.end(), rng);
        CHECK(simplex_gap(v) == Approx(g).epsilon(1e-12));
    }
}

TEST_CASE("semantic dispersion") {
    const std::vector<double> same{0.4, 0.4, 0.4};
    CHECK(semantic_dispersion(same) == 0.0);
    const std::vector<double> pair{0.40, 0.43};
    CHECK(semantic_dispersion(pair) == Approx(0.03));
    const std::vector<double> widened{0.40, 0.43, 0.41};
    CHECK(semantic_dispersion(widened) == semantic_dispersion(pair));
    const std::vector<double> single{0.4};
    CHECK_THROWS_AS(semantic_dispersion(single), MetricError);
}
