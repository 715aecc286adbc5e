#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "pmlab/io.hpp"
#include "pmlab/simulator.hpp"
#include "support.hpp"

using namespace pmlab;
using namespace pmlab::sim;
using doctest::Approx;

TEST_CASE("step_belief examples") {
    MarketAttributes a;
    a.anchor_logodds = 0.0;
    a.mean_reversion = 0.1;
    a.baseline_vol = 0.2;
    CHECK(step_belief(0.0, a, 0.0, 0.0) == 0.0);
    CHECK(step_belief(1.0, a, 0.0, 1.0) == Approx(1.1));
    CHECK(step_belief(1.0, a, 0.3, 1.0) == Approx(1.4));
}

TEST_CASE("belief process reverts to its anchor") {
    MarketAttributes a;
    a.anchor_logodds = 0.7;
    a.mean_reversion = 0.1;
    a.baseline_vol = 0.2;
    std::mt19937_64 rng(7);
    std::normal_distribution<double> z;
    const int n = 10000;
    double x = a.anchor_logodds, sum = 0.0;
    for (int i = 0; i < n; ++i) {
        x = step_belief(x, a, 0.0, z(rng));
        sum += x;
    }
    const double phi = 1.0 - a.mean_reversion;
    const double sd_x = a.baseline_vol / std::sqrt(1.0 - phi * phi);
    const double se = sd_x * std::sqrt((1.0 + phi) / (1.0 - phi) / n);
    CHECK(std::abs(sum / n - a.anchor_logodds) < 3.0 * se);
}

TEST_CASE("draw_outcome frequencies") {
    auto freq = [](double anchor) {
        MarketAttributes a;
        a.anchor_logodds = anchor;
        std::mt19937_64 rng(8);
        int ones = 0;
        for (int i = 0; i < 10000; ++i) ones += draw_outcome(a, rng);
        return ones / 10000.0;
    };
    CHECK(freq(20.0) == 1.0);
    CHECK(std::abs(freq(0.0) - 0.5) < 0.015);
    CHECK(std::abs(freq(logit(0.25)) - 0.25) < 0.013);
}

TEST_CASE("observe_probability") {
    CHECK(observe_probability(0.0, 0.0, 1.0, 0.0) == 0.5);
    const ObservationNoise p;
    for (double clarity : {0.0, 0.5, 1.0}) {
        for (double draw : {-3.0, 0.0, 3.0}) {
            const double v = observe_probability(10.0, 0.0, clarity, draw, p);
            CHECK(v <= 0.99);
            CHECK(v >= 0.01);
            CHECK(observe_probability(-10.0, 0.0, clarity, draw, p) >= 0.01);
        }
    }
}

TEST_CASE("observation noise falls with automation and rises with ambiguity") {
    const ObservationNoise p;
    std::mt19937_64 rng(9);
    std::normal_distribution<double> z;
    std::vector<double> draws(10000);
    for (auto& d : draws) d = z(rng);
    auto sample_var = [&](double api, double clarity) {
        double s = 0.0, s2 = 0.0;
        for (double d : draws) {
            const double v = observe_probability(0.0, api, clarity, d, p);
            s += v;
            s2 += v * v;
        }
        const double n = static_cast<double>(draws.size());
        return s2 / n - (s / n) * (s / n);
    };
    const std::array<double, 5> grid{0.0, 0.25, 0.5, 0.75, 1.0};
    for (std::size_t i = 0; i < grid.size(); ++i)
        for (std::size_t j = 0; j + 1 < grid.size(); ++j) {
            CHECK(sample_var(grid[j + 1], grid[i]) < sample_var(grid[j], grid[i]));
            CHECK(sample_var(grid[i], grid[j + 1]) < sample_var(grid[i], grid[j]));
        }
}

TEST_CASE("assign_treatments") {
    SimConfig cfg;
    cfg.never_treated_share = 1.0;
    for (const auto& s : assign_treatments(cfg)) CHECK(s.never_treated());

    cfg.never_treated_share = 0.2;
    const auto sched = assign_treatments(cfg);
    REQUIRE(sched.size() == 320);
    CHECK(std::count_if(sched.begin(), sched.end(), [](const auto& s) { return s.never_treated(); }) == 64);
    for (const auto& s : sched) {
        for (const auto& at : {s.mm_activation, s.lip_activation, s.api_adoption}) {
            if (!at) continue;
            CHECK(*at >= cfg.activation_lo);
            CHECK(*at <= cfg.activation_hi);
        }
        CHECK(s.api_ramp_length == cfg.api_ramp_length);
    }
}

TEST_CASE("professional share is monotone in channels") {
    const ShareParams p;
    CHECK(professional_share(p, false, false, 0.0) == Approx(0.1));
    const double all = professional_share(p, true, true, 1.0);
    CHECK(all > professional_share(p, true, false, 0.0));
    CHECK(all > professional_share(p, false, true, 0.0));
    CHECK(all > professional_share(p, false, false, 1.0));
    CHECK(all <= 1.0);

    std::mt19937_64 rng(10);
    std::uniform_int_distribution<int> when(0, 60);
    for (int i = 0; i < 100; ++i) {
        TreatmentSchedule s;
        if (i % 2) s.mm_activation = when(rng);
        if (i % 3) s.lip_activation = when(rng);
        if (i % 5) s.api_adoption = when(rng);
        s.api_ramp_length = 1 + i % 10;
        double prev = professional_share_path(p, s, 0);
        for (int t = 1; t < 80; ++t) {
            const double cur = professional_share_path(p, s, t);
            CHECK(cur >= prev);
            prev = cur;
        }
    }
}

namespace {

struct RowFixture {
    MarketContext market;
    RowDesign design;
    PeriodState state;
    RowNoise noise;

    RowFixture() {
        market.spec.attrs.mean_reversion = 0.15;
        market.market_effect = {0.3, 0.2, 0.1, 0.05, -0.4, 0.001};
        design.n_periods = 30;
        for (auto& b : design.bases) b = {};
        design.bases[static_cast<std::size_t>(LinearOutcome::QuotedSpread)].level = 6.0;
        design.bases[static_cast<std::size_t>(LinearOutcome::EffectiveSpread)].level = 6.0;
        design.bases[static_cast<std::size_t>(LinearOutcome::AdverseSelection)].level = 2.0;
        design.bases[static_cast<std::size_t>(LinearOutcome::LogDepth)].level = 5.0;
        design.bases[static_cast<std::size_t>(LinearOutcome::PriceImpact)].level = 13.0;
        design.bases[static_cast<std::size_t>(LinearOutcome::NoarbGap)].level = 0.02;
        design.effects = DesignedEffects::defaults();
        design.effects.heterogeneity = false;
        state.t = 12;
        state.observed_prob = 0.4;
    }
};

}  // namespace

TEST_CASE("gen_row with no channels equals the additive base") {
    RowFixture f;
    const auto r = gen_row(f.market, f.state, f.noise, f.design);
    CHECK(r.quoted_spread == Approx(6.3));
    CHECK(r.effective_spread == Approx(6.2));
    CHECK(r.adverse_selection == Approx(2.1));
    CHECK(std::log(r.depth) == Approx(5.05));
    CHECK(r.price_impact == Approx(12.6));
    CHECK(r.yes_price + r.no_price - 1.0 == Approx(0.021));
}

TEST_CASE("toggling the market maker moves the quoted spread by the designed effect") {
    RowFixture f;
    f.market.spec.schedule.mm_activation = 20;
    const auto off = gen_row(f.market, f.state, f.noise, f.design);
    f.market.spec.schedule.mm_activation = 5;
    const auto on = gen_row(f.market, f.state, f.noise, f.design);
    CHECK(on.quoted_spread - off.quoted_spread == Approx(-0.734).epsilon(1e-12));
    CHECK(on.realized_spread == Approx(on.effective_spread - on.adverse_selection).epsilon(1e-15));
}

TEST_CASE("horizon factor") {
    CHECK(horizon_factor(0.2, metrics::kDefaultHorizon) == 1.0);
    CHECK(horizon_factor(0.2, 1) < horizon_factor(0.2, 3));
    CHECK(horizon_factor(0.2, 3) < 1.0);
    CHECK(horizon_factor(0.2, 10) > 1.0);
}

TEST_CASE("default panel size") {
    SimConfig cfg;
    cfg.calibration.enabled = false;
    const auto p = simulate_panel(cfg);
    CHECK(p.rows.size() == 57600);
    CHECK(p.n_markets == 320);
    CHECK(p.n_periods == 180);
    for (const auto& r : p.rows) {
        if (std::abs(r.adverse_selection - (r.effective_spread - r.realized_spread)) > 1e-12 * (1.0 + r.effective_spread)) {
            FAIL("identity broken at market " << r.market_id << " t " << r.t);
        }
    }
}

TEST_CASE("declared panel size must match") {
    auto cfg = testing::small_config();
    cfg.panel_size = 57600;
    try {
        cfg.validate();
        FAIL("expected a configuration error");
    } catch (const ConfigError& e) {
        CHECK(e.key() == "panel_size");
    }
}

TEST_CASE("simulation is deterministic and seed dependent") {
    auto cfg = testing::small_config();
    const auto a = io::panel_csv(simulate_panel(cfg));
    cfg.threads = 4;
    CHECK(io::panel_csv(simulate_panel(cfg)) == a);
    cfg.seed += 1;
    const auto other = simulate_panel(cfg);
    const auto base = simulate_panel(testing::small_config());
    bool differs = false;
    for (std::size_t i = 0; i < base.rows.size(); ++i) differs |= base.rows[i].observed_prob != other.rows[i].observed_prob;
    CHECK(differs);
}

TEST_CASE("simulated panels validate") {
    CHECK(validate_panel(simulate_panel(testing::small_config())).empty());
}

TEST_CASE("shock frequency matches jump intensity") {
    auto cfg = testing::small_config(200, 100);
    const auto p = simulate_panel(cfg);
    double expected = 0.0, var = 0.0, shocks = 0.0;
    for (const auto& r : p.rows) {
        const double q = p.markets[static_cast<std::size_t>(r.market_id)].attrs.jump_intensity;
        expected += q;
        var += q * (1.0 - q);
        shocks += r.shock;
    }
    CHECK(std::abs(shocks - expected) < 3.0 * std::sqrt(var));
}

TEST_CASE("families sum to one and resolve exactly once") {
    auto cfg = testing::small_config(60, 20);
    cfg.family_fraction = 0.5;
    const auto markets = draw_markets(cfg);
    std::map<int, std::pair<double, int>> fam;
    for (const auto& m : markets) {
        if (!m.family_id) continue;
        fam[*m.family_id].first += logistic(m.attrs.anchor_logodds);
        fam[*m.family_id].second += m.outcome;
    }
    REQUIRE(fam.size() == 10);
    for (const auto& [id, v] : fam) {
        CHECK(v.first == Approx(1.0).epsilon(1e-9));
        CHECK(v.second == 1);
    }
}

TEST_CASE("configuration validation names the key") {
    auto bad = [](auto mutate, const std::string& key) {
        auto cfg = testing::small_config();
        mutate(cfg);
        try {
            cfg.validate();
            FAIL("expected ConfigError for " << key);
        } catch (const ConfigError& e) {
            CHECK(e.key() == key);
        }
    };
    bad([](SimConfig& c) { c.n_markets = 1; }, "n_markets");
    bad([](SimConfig& c) { c.never_treated_share = 1.5; }, "never_treated_share");
    bad([](SimConfig& c) { c.mm_probability = -0.1; }, "mm_probability");
    bad([](SimConfig& c) { c.realized_horizon = 0; }, "realized_horizon");
    bad([](SimConfig& c) { c.family_size = 1; }, "family_size");
}
