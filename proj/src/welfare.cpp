#include "pmlab/welfare.hpp"

#include <algorithm>
#include <cmath>

namespace pmlab::welfare {

std::string_view to_string(ShockState s) { return s == ShockState::Calm ? "calm" : "shock"; }

std::size_t cell_index(ShockState s, Regime r) {
    return static_cast<std::size_t>(s) * 2 + (r == Regime::HighBundle ? 1 : 0);
}

std::string cell_label(std::size_t cell) {
    const auto s = cell < 2 ? ShockState::Calm : ShockState::Shock;
    return std::string(to_string(s)) + "/" + (cell % 2 ? "high" : "low");
}

const std::optional<WelfareCell>& ArchetypeCostTable::at(Archetype a, ShockState s, Regime r) const {
    return cells[static_cast<std::size_t>(a)][cell_index(s, r)];
}

ArchetypeCostTable archetype_cost_table(const Panel& panel, double api_threshold) {
    std::array<std::array<double, kCellCount>, kArchetypeCount> sum{};
    std::array<std::size_t, kCellCount> count{};
    for (const auto& r : panel.rows) {
        const auto c = cell_index(r.shock ? ShockState::Shock : ShockState::Calm, classify_regime(r, api_threshold));
        ++count[c];
        for (std::size_t a = 0; a < kArchetypeCount; ++a) sum[a][c] += r.archetype_costs[a];
    }
    ArchetypeCostTable table;
    for (std::size_t a = 0; a < kArchetypeCount; ++a) {
        for (std::size_t c = 0; c < kCellCount; ++c) {
            if (count[c] == 0) continue;
            WelfareCell cell;
            cell.archetype = static_cast<Archetype>(a);
            cell.shock_state = c < 2 ? ShockState::Calm : ShockState::Shock;
            cell.regime = c % 2 ? Regime::HighBundle : Regime::LowBundle;
            cell.count = count[c];
            cell.mean_cost = sum[a][c] / static_cast<double>(count[c]);
            table.cells[a][c] = cell;
        }
    }
    return table;
}

double pass_through(double delta_eff, double delta_quoted) {
    if (std::abs(delta_quoted) < kQuotedEpsilon) throw WelfareError("pass-through undefined: no quoted-spread change");
    return (-delta_eff) / (-delta_quoted);
}

double shock_wedge(double pt_shock, double pt_calm) { return pt_shock - pt_calm; }

namespace {

std::string cost_column(Archetype a) { return "cost_" + std::string(archetype_key(a)); }

// Controls without the shock indicator; shock is constant within a subsample.
econ::EstimationOptions without_shock(econ::EstimationOptions opts) {
    std::erase(opts.controls, std::string("shock"));
    return opts;
}

void require_cells(const Panel& panel, Archetype group, double api_threshold) {
    std::array<bool, kCellCount> seen{};
    for (const auto& r : panel.rows)
        seen[cell_index(r.shock ? ShockState::Shock : ShockState::Calm, classify_regime(r, api_threshold))] = true;
    for (std::size_t c = 0; c < kCellCount; ++c)
        if (!seen[c])
            throw WelfareError("group " + std::string(archetype_key(group)) + ": missing cell " + cell_label(c));
}

double regime_effect(const Panel& panel, const std::string& outcome, const econ::RowMask& mask,
                     const econ::EstimationOptions& opts) {
    return econ::twfe_estimate(panel, outcome, {"high_bundle"}, opts, mask).coef_of("high_bundle");
}

}  // namespace

GroupDeltas estimate_group_deltas(const Panel& panel, Archetype group, DeltaMethod method,
                                  const econ::EstimationOptions& opts) {
    require_cells(panel, group, opts.api_threshold);
    GroupDeltas d;
    d.group = group;
    const auto cost = cost_column(group);
    if (method == DeltaMethod::Subsample) {
        const auto sub = without_shock(opts);
        for (int s = 0; s < 2; ++s) {
            econ::RowMask mask(panel.rows.size());
            for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = panel.rows[i].shock == (s == 1);
            d.delta_eff[static_cast<std::size_t>(s)] = regime_effect(panel, cost, mask, sub);
            d.delta_quoted[static_cast<std::size_t>(s)] = regime_effect(panel, "quoted_spread", mask, sub);
        }
    } else {
        auto inter = opts;
        for (const auto* c : {"shock", "high_bundle_x_shock"})
            if (std::find(inter.controls.begin(), inter.controls.end(), c) == inter.controls.end())
                inter.controls.emplace_back(c);
        auto fit = [&](const std::string& outcome, std::array<double, 2>& out) {
            const auto r = econ::twfe_estimate(panel, outcome, {"high_bundle"}, inter);
            out[0] = r.coef_of("high_bundle");
            out[1] = out[0] + r.coef_of("high_bundle_x_shock");
        };
        fit(cost, d.delta_eff);
        fit("quoted_spread", d.delta_quoted);
    }
    return d;
}

std::vector<PassThroughResult> pass_through_table(const Panel& panel, DeltaMethod method,
                                                  const econ::EstimationOptions& opts) {
    const double dq = regime_effect(panel, "quoted_spread", {}, opts);
    std::vector<PassThroughResult> out;
    for (auto a : kAllArchetypes) {
        PassThroughResult r;
        r.group = a;
        r.delta_quoted = dq;
        r.delta_eff = regime_effect(panel, cost_column(a), {}, opts);
        if (std::abs(dq) >= kQuotedEpsilon) r.pt = pass_through(r.delta_eff, dq);
        r.by_state = estimate_group_deltas(panel, a, method, opts);
        for (std::size_t s = 0; s < 2; ++s)
            if (std::abs(r.by_state.delta_quoted[s]) >= kQuotedEpsilon)
                r.pt_state[s] = pass_through(r.by_state.delta_eff[s], r.by_state.delta_quoted[s]);
        if (r.pt_state[0] && r.pt_state[1]) r.sw = shock_wedge(*r.pt_state[1], *r.pt_state[0]);
        out.push_back(r);
    }
    return out;
}

std::string_view to_string(Identification id) {
    return id == Identification::Public ? "IDENTIFIED-FROM-PUBLIC-DATA" : "NOT-IDENTIFIED-FROM-PUBLIC-DATA";
}

double WelfareReport::total() const {
    double s = 0.0;
    for (const auto& c : components) s += c.value;
    return s;
}

WelfareReport welfare_decomposition(const Panel& panel, const econ::EstimationOptions& opts) {
    auto effect = [&](const std::string& outcome) {
        const auto r = econ::twfe_estimate(panel, outcome, {"high_bundle"}, opts);
        return std::pair{r.coef_of("high_bundle"), r.se_of("high_bundle")};
    };
    WelfareReport rep;

    // Takers: average cost reduction across the four archetypes.
    double cs = 0.0, cs_var = 0.0;
    for (auto a : kAllArchetypes) {
        const auto [b, se] = effect(cost_column(a));
        cs -= b / static_cast<double>(kArchetypeCount);
        cs_var += se * se / static_cast<double>(kArchetypeCount * kArchetypeCount);
    }
    rep.components.push_back({"taker_surplus", cs, std::sqrt(cs_var), Identification::Public,
                              "minus mean regime effect on archetype execution costs"});

    const auto [rs, rs_se] = effect("realized_spread");
    rep.components.push_back({"maker_profit", rs, rs_se, Identification::Public,
                              "regime effect on realized spread (maker revenue per trade)"});

    const auto [as, as_se] = effect("adverse_selection");
    rep.components.push_back({"informed_rents", as, as_se, Identification::NotIdentified,
                              "simulator ground truth: regime effect on adverse selection"});

    // Price impact in bps of the midpoint converted to cents at the average midpoint.
    double mid = 0.0;
    for (const auto& r : panel.rows) mid += r.observed_prob;
    mid /= static_cast<double>(panel.rows.size());
    const double bps_to_cents = mid * metrics::kCentsPerUnit / 10000.0;
    const auto [pi, pi_se] = effect("price_impact");
    rep.components.push_back({"risk_sharing", -pi * bps_to_cents, pi_se * bps_to_cents, Identification::NotIdentified,
                              "simulator ground truth: minus regime effect on price impact, in cents at the mean midpoint"});
    return rep;
}

}  // namespace pmlab::welfare
