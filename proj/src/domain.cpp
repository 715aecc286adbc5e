#include "pmlab/domain.hpp"

#include <cmath>
#include <sstream>

namespace pmlab {

std::string_view to_string(Category c) {
    switch (c) {
    case Category::Politics: return "Politics";
    case Category::Macro: return "Macro";
    case Category::Sports: return "Sports";
    case Category::Crypto: return "Crypto";
    }
    return "Politics";
}

Category parse_category(std::string_view s) {
    if (s == "Politics") return Category::Politics;
    if (s == "Macro") return Category::Macro;
    if (s == "Sports") return Category::Sports;
    if (s == "Crypto") return Category::Crypto;
    throw DataError("unknown market category '" + std::string(s) + "'");
}

std::vector<std::string> attribute_violations(const MarketAttributes& a) {
    std::vector<std::string> out;
    auto unit = [&](double v, const char* name) {
        if (!(v >= 0.0 && v <= 1.0)) out.push_back(std::string(name) + " outside [0,1]");
    };
    unit(a.info_density, "info_density");
    unit(a.hedgeability, "hedgeability");
    unit(a.resolution_clarity, "resolution_clarity");
    unit(a.jump_intensity, "jump_intensity");
    if (!(a.baseline_vol > 0.0)) out.emplace_back("baseline_vol must be positive");
    if (!(a.mean_reversion > 0.0 && a.mean_reversion < 1.0))
        out.emplace_back("mean_reversion outside (0,1)");
    if (!std::isfinite(a.anchor_logodds)) out.emplace_back("anchor_logodds not finite");
    return out;
}

double TreatmentSchedule::api_intensity(int t) const {
    if (!api_adoption || t < *api_adoption) return 0.0;
    const int ramp = api_ramp_length > 0 ? api_ramp_length : 1;
    const double x = static_cast<double>(t - *api_adoption) / static_cast<double>(ramp);
    return x >= 1.0 ? 1.0 : x;
}

std::string_view to_string(Archetype a) {
    switch (a) {
    case Archetype::SmallSlowTaker: return "Small slow taker";
    case Archetype::SmallFastTaker: return "Small fast taker";
    case Archetype::LargeHedgedTrader: return "Large hedged trader";
    case Archetype::InformedLikeTrader: return "Informed-like trader";
    }
    return "";
}

std::string_view archetype_key(Archetype a) {
    switch (a) {
    case Archetype::SmallSlowTaker: return "slow";
    case Archetype::SmallFastTaker: return "fast";
    case Archetype::LargeHedgedTrader: return "hedged";
    case Archetype::InformedLikeTrader: return "informed";
    }
    return "";
}

std::array<TraderArchetype, kArchetypeCount> default_archetypes() {
    return {{
        {Archetype::SmallSlowTaker, 5, 1.0, 0.0},
        {Archetype::SmallFastTaker, 1, 1.0, 0.0},
        {Archetype::LargeHedgedTrader, 1, 10.0, 0.2},
        {Archetype::InformedLikeTrader, 0, 3.0, 0.8},
    }};
}

std::string_view to_string(Regime r) {
    return r == Regime::HighBundle ? "High bundle" : "Low bundle";
}

int active_channel_count(const PanelRow& row, double api_threshold) {
    return static_cast<int>(row.mm_active) + static_cast<int>(row.lip_active) +
           static_cast<int>(row.api_intensity >= api_threshold);
}

Regime classify_regime(const PanelRow& row, double api_threshold) {
    return active_channel_count(row, api_threshold) >= 2 ? Regime::HighBundle : Regime::LowBundle;
}

std::string to_string(const Violation& v) {
    std::ostringstream os;
    if (v.market_id >= 0) os << "market " << v.market_id << ", t " << v.t << ": ";
    os << v.what;
    return os.str();
}

namespace {

void check_row(const PanelRow& r, const MarketSpec* spec, std::vector<Violation>& out) {
    auto bad = [&](std::string what) { out.push_back({r.market_id, r.t, std::move(what)}); };

    // Tolerance covers the six-decimal CSV representation.
    const double identity = r.adverse_selection - (r.effective_spread - r.realized_spread);
    if (!(std::abs(identity) <= 1e-9 * (1.0 + std::abs(r.effective_spread))))
        bad("adverse_selection != effective_spread - realized_spread");
    if (!(r.observed_prob >= kProbFloor - 1e-12 && r.observed_prob <= kProbCeil + 1e-12))
        bad("observed_prob outside [0.01, 0.99]");
    if (!(r.true_prob > 0.0 && r.true_prob < 1.0)) bad("true_prob outside (0,1)");
    if (!(r.quoted_spread >= kTickCents - 1e-9)) bad("quoted_spread below one tick");
    if (!(r.effective_spread >= 0.0)) bad("negative effective_spread");
    if (!(r.depth > 0.0)) bad("non-positive depth");
    if (!(r.api_intensity >= 0.0 && r.api_intensity <= 1.0)) bad("api_intensity outside [0,1]");
    if (!(r.professional_share >= 0.0 && r.professional_share <= 1.0))
        bad("professional_share outside [0,1]");
    if (!(r.yes_price > 0.0 && r.yes_price < 1.0 && r.no_price > 0.0 && r.no_price < 1.0))
        bad("yes/no price outside (0,1)");
    if (spec) {
        const auto& s = spec->schedule;
        if (r.mm_active != s.mm_active(r.t) || r.lip_active != s.lip_active(r.t))
            bad("channel flags inconsistent with treatment schedule");
        if (std::abs(r.api_intensity - s.api_intensity(r.t)) > 1e-6)
            bad("api_intensity inconsistent with treatment schedule");
    }
}

}  // namespace

std::vector<Violation> validate_panel(const Panel& panel) {
    std::vector<Violation> out;
    const auto expected = static_cast<std::size_t>(panel.n_markets) *
                          static_cast<std::size_t>(panel.n_periods);
    if (panel.n_markets <= 0 || panel.n_periods <= 0 || panel.rows.size() != expected) {
        out.push_back({-1, -1, "non-rectangular"});
    }
    if (panel.markets.size() != static_cast<std::size_t>(panel.n_markets))
        out.push_back({-1, -1, "market table size does not match n_markets"});

    for (std::size_t i = 0; i < panel.markets.size(); ++i) {
        const auto& m = panel.markets[i];
        if (m.market_id != static_cast<int>(i))
            out.push_back({m.market_id, -1, "market ids not dense"});
        for (auto& msg : attribute_violations(m.attrs)) out.push_back({m.market_id, -1, msg});
        if (m.outcome != 0 && m.outcome != 1) out.push_back({m.market_id, -1, "outcome not in {0,1}"});
        for (auto act : {m.schedule.mm_activation, m.schedule.lip_activation, m.schedule.api_adoption}) {
            if (act && (*act < 0 || *act >= panel.n_periods))
                out.push_back({m.market_id, -1, "activation time outside [0, T)"});
        }
    }

    const bool rectangular = out.empty() || out.front().what != "non-rectangular";
    for (std::size_t i = 0; i < panel.rows.size(); ++i) {
        const auto& r = panel.rows[i];
        const MarketSpec* spec = nullptr;
        if (r.market_id >= 0 && static_cast<std::size_t>(r.market_id) < panel.markets.size())
            spec = &panel.markets[static_cast<std::size_t>(r.market_id)];
        if (rectangular && panel.n_periods > 0) {
            const auto m = static_cast<int>(i / static_cast<std::size_t>(panel.n_periods));
            const auto t = static_cast<int>(i % static_cast<std::size_t>(panel.n_periods));
            if (r.market_id != m || r.t != t) {
                out.push_back({r.market_id, r.t, "rows not in (market, t) order"});
                continue;
            }
        }
        check_row(r, spec, out);
    }
    return out;
}

double logistic(double x) {
    if (x >= 0.0) {
        const double z = std::exp(-x);
        return 1.0 / (1.0 + z);
    }
    const double z = std::exp(x);
    return z / (1.0 + z);
}

double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace pmlab
