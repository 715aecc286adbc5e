#include <doctest.h>

#include <cmath>
#include <random>

#include "pmlab/welfare.hpp"
#include "support.hpp"

using namespace pmlab;
using namespace pmlab::welfare;
using doctest::Approx;

TEST_CASE("pass-through examples") {
    CHECK(pass_through(-1.0, -1.0) == 1.0);
    CHECK(pass_through(-0.5, -1.0) == 0.5);
    CHECK(pass_through(0.2, -1.0) == Approx(-0.2));
    CHECK_THROWS_AS(pass_through(-1.0, 0.0), WelfareError);
    CHECK_THROWS_AS(pass_through(-1.0, 5e-10), WelfareError);
    CHECK_NOTHROW(pass_through(-1.0, 2e-9));
}

TEST_CASE("shock wedge examples") {
    CHECK(shock_wedge(0.3, 0.9) == Approx(-0.6));
    CHECK(shock_wedge(0.4, 0.4) == 0.0);
}

TEST_CASE("pass-through scale invariance and wedge antisymmetry") {
    std::mt19937_64 rng(41);
    for (int i = 0; i < 1000; ++i) {
        const double de = testing::uniform(rng, -2.0, 2.0);
        const double dq = testing::uniform(rng, 0.01, 2.0) * (i % 2 ? 1.0 : -1.0);
        const double c = testing::uniform(rng, 0.01, 100.0);
        CHECK(pass_through(c * de, c * dq) == Approx(pass_through(de, dq)).epsilon(1e-12));
        const double a = testing::uniform(rng, -3.0, 3.0), b = testing::uniform(rng, -3.0, 3.0);
        CHECK(shock_wedge(a, b) == -shock_wedge(b, a));
    }
}

TEST_CASE("cell labels") {
    CHECK(cell_label(cell_index(ShockState::Calm, Regime::LowBundle)) == "calm/low");
    CHECK(cell_label(cell_index(ShockState::Calm, Regime::HighBundle)) == "calm/high");
    CHECK(cell_label(cell_index(ShockState::Shock, Regime::LowBundle)) == "shock/low");
    CHECK(cell_label(cell_index(ShockState::Shock, Regime::HighBundle)) == "shock/high");
}

TEST_CASE("archetype cost table matches brute-force cell means") {
    const auto panel = sim::simulate_panel(testing::small_config());
    const auto table = archetype_cost_table(panel);
    for (auto a : kAllArchetypes)
        for (auto s : {ShockState::Calm, ShockState::Shock})
            for (auto g : {Regime::LowBundle, Regime::HighBundle}) {
                double sum = 0.0;
                std::size_t n = 0;
                for (const auto& r : panel.rows) {
                    if (r.shock != (s == ShockState::Shock) || classify_regime(r) != g) continue;
                    sum += r.archetype_costs[static_cast<std::size_t>(a)];
                    ++n;
                }
                const auto& cell = table.at(a, s, g);
                REQUIRE(cell.has_value());
                CHECK(cell->count == n);
                CHECK(cell->mean_cost == Approx(sum / n).epsilon(1e-12));
            }
}

TEST_CASE("zero-noise archetype costs follow the designed cost function") {
    const auto res = sim::simulate(testing::exact_config());
    const auto& models = res.design.row_design.archetype_models;
    for (const auto& r : res.panel.rows)
        for (std::size_t a = 0; a < kArchetypeCount; ++a) {
            const auto& m = models[a];
            double cost = r.effective_spread + m.base + m.share_loading * r.professional_share;
            if (r.shock) cost += m.shock_premium + m.shock_share_loading * r.professional_share;
            CHECK(r.archetype_costs[a] == Approx(cost).epsilon(1e-12));
        }
}

TEST_CASE("untreated panel leaves high-bundle cells absent") {
    auto cfg = testing::small_config();
    cfg.never_treated_share = 1.0;
    cfg.calibration.enabled = false;
    const auto panel = sim::simulate_panel(cfg);
    const auto table = archetype_cost_table(panel);
    CHECK_FALSE(table.at(Archetype::SmallSlowTaker, ShockState::Calm, Regime::HighBundle).has_value());
    CHECK(table.at(Archetype::SmallSlowTaker, ShockState::Calm, Regime::LowBundle).has_value());
    try {
        estimate_group_deltas(panel, Archetype::SmallSlowTaker);
        FAIL("expected a missing-cell error");
    } catch (const WelfareError& e) {
        CHECK(std::string(e.what()).find("calm/high") != std::string::npos);
    }
}

namespace {

// Costs move one for one with the quoted spread: every group has full pass-through.
sim::SimConfig full_conversion_config() {
    auto cfg = testing::exact_config(80, 40, 23);
    cfg.calibration.enabled = false;
    cfg.effects = sim::DesignedEffects::zero();
    for (auto o : {sim::LinearOutcome::QuotedSpread, sim::LinearOutcome::EffectiveSpread}) {
        cfg.effects[o].main = {-0.6, -0.3, -0.2};
        cfg.effects[o].shock_interaction = {0.1, 0.05, 0.0};
    }
    for (auto& m : cfg.archetype_models) m = {};
    return cfg;
}

}  // namespace

TEST_CASE("zero-noise deltas give exact full conversion") {
    const auto panel = sim::simulate_panel(full_conversion_config());
    for (auto method : {DeltaMethod::Subsample, DeltaMethod::Interaction}) {
        for (const auto& r : pass_through_table(panel, method)) {
            REQUIRE(r.pt.has_value());
            CHECK(*r.pt == Approx(1.0).epsilon(1e-9));
            for (std::size_t s = 0; s < 2; ++s) {
                CHECK(r.by_state.delta_eff[s] == Approx(r.by_state.delta_quoted[s]).epsilon(1e-9));
                REQUIRE(r.pt_state[s].has_value());
            }
            REQUIRE(r.sw.has_value());
            CHECK(std::abs(*r.sw) < 1e-9);
        }
    }
}

TEST_CASE("quoted-spread denominator is shared across groups") {
    const auto panel = sim::simulate_panel(testing::small_config(80, 40));
    const auto base = estimate_group_deltas(panel, Archetype::SmallSlowTaker);
    for (auto a : kAllArchetypes) {
        const auto d = estimate_group_deltas(panel, a);
        CHECK(d.delta_quoted[0] == base.delta_quoted[0]);
        CHECK(d.delta_quoted[1] == base.delta_quoted[1]);
    }
}

TEST_CASE("zero-effect design gives a zero welfare decomposition") {
    auto cfg = testing::exact_config(60, 30, 29);
    cfg.calibration.enabled = false;
    cfg.effects = sim::DesignedEffects::zero();
    for (auto& m : cfg.archetype_models) m = {};
    const auto rep = welfare_decomposition(sim::simulate_panel(cfg));
    REQUIRE(rep.components.size() == 4);
    for (const auto& c : rep.components) CHECK(std::abs(c.value) < 1e-9);
    CHECK(std::abs(rep.total()) < 1e-9);
}

TEST_CASE("welfare components carry identification labels") {
    const auto rep = welfare_decomposition(sim::simulate_panel(testing::small_config(80, 40)));
    REQUIRE(rep.components.size() == 4);
    CHECK(rep.components[0].name == "taker_surplus");
    CHECK(rep.components[0].identification == Identification::Public);
    CHECK(rep.components[1].identification == Identification::Public);
    CHECK(rep.components[2].identification == Identification::NotIdentified);
    CHECK(rep.components[3].identification == Identification::NotIdentified);
    CHECK(to_string(Identification::NotIdentified) == "NOT-IDENTIFIED-FROM-PUBLIC-DATA");
    CHECK(to_string(Identification::Public) == "IDENTIFIED-FROM-PUBLIC-DATA");
}
