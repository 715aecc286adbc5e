#include "pmlab/report.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>

#include "pmlab/io.hpp"
#include "pmlab/svg.hpp"

namespace pmlab::report {

using io::fixed;

const std::vector<std::string>& modular_outcomes() {
    static const std::vector<std::string> v{"quoted_spread", "effective_spread", "log_depth",
                                            "price_impact",  "brier",            "noarb_gap"};
    return v;
}

const std::vector<std::string>& shock_outcomes() {
    static const std::vector<std::string> v{"adverse_selection", "realized_spread", "price_impact", "brier",
                                            "noarb_gap"};
    return v;
}

const std::vector<std::string>& event_outcomes() {
    static const std::vector<std::string> v{"quoted_spread", "log_depth", "price_impact", "brier"};
    return v;
}

namespace {

bool varies(const std::vector<double>& col, const econ::RowMask& mask) {
    std::optional<double> first;
    for (std::size_t i = 0; i < col.size(); ++i) {
        if (!mask.empty() && !mask[i]) continue;
        if (!first) first = col[i];
        else if (col[i] != *first) return true;
    }
    return false;
}

// TWFE of `outcome` on `columns` plus controls, skipping regressors that never vary.
CoefRow fit_row(const Panel& panel, const std::string& outcome, const std::vector<std::string>& columns,
                const econ::EstimationOptions& opts, std::vector<std::string>& notes, const econ::RowMask& mask = {}) {
    CoefRow row;
    row.outcome = outcome;
    row.columns = columns;
    row.coef.resize(columns.size());
    row.se.resize(columns.size());
    std::vector<std::string> regs;
    for (const auto& c : columns)
        if (varies(econ::regressor_column(panel, c, opts), mask)) regs.push_back(c);
    if (regs.empty()) {
        notes.push_back(outcome + ": no regressor varies; row left empty");
        return row;
    }
    for (const auto& c : opts.controls)
        if (std::find(regs.begin(), regs.end(), c) == regs.end() && varies(econ::regressor_column(panel, c, opts), mask))
            regs.push_back(c);
    try {
        const auto r = econ::fit_twfe(econ::build_design(panel, outcome, regs, mask, opts));
        for (std::size_t j = 0; j < columns.size(); ++j) {
            if (!r.has(columns[j])) continue;
            row.coef[j] = r.coef_of(columns[j]);
            row.se[j] = r.se_of(columns[j]);
        }
        row.n = r.n;
        row.clusters = r.clusters;
    } catch (const econ::EstimationError& e) {
        notes.push_back(outcome + ": " + e.what());
    }
    return row;
}

std::string opt_fixed(const std::optional<double>& v, int decimals = 6) { return v ? fixed(*v, decimals) : ""; }

std::string stars_of(const std::optional<double>& b, const std::optional<double>& se) {
    if (!b || !se || *se <= 0.0) return "";
    return std::string(econ::significance_stars(*b / *se));
}

// Columns padded to their widest cell; first column left-aligned, the rest right-aligned.
std::string aligned(const std::string& title, const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> width;
    for (const auto& r : rows) {
        if (width.size() < r.size()) width.resize(r.size(), 0);
        for (std::size_t j = 0; j < r.size(); ++j) width[j] = std::max(width[j], r[j].size());
    }
    std::string out = title + "\n";
    for (const auto& r : rows) {
        std::string line;
        for (std::size_t j = 0; j < r.size(); ++j) {
            const auto pad = std::string(width[j] - r[j].size(), ' ');
            line += j == 0 ? r[j] + pad : "  " + pad + r[j];
        }
        while (!line.empty() && line.back() == ' ') line.pop_back();
        out += line + "\n";
    }
    return out + "\n";
}

std::string coef_cell(const std::optional<double>& b, const std::optional<double>& se) {
    if (!b) return "-";
    return fixed(*b, 3) + stars_of(b, se) + " (" + fixed(*se, 3) + ")";
}

double regime_field(const econ::RegimeStats& s, std::size_t k) {
    switch (k) {
    case 0: return s.quoted_spread;
    case 1: return s.effective_spread;
    case 2: return s.depth;
    case 3: return s.price_impact;
    case 4: return s.brier;
    case 5: return s.noarb_gap;
    default: return s.ece;
    }
}

constexpr double econ::RegimeStats::*kRegimeFields[] = {
    &econ::RegimeStats::quoted_spread, &econ::RegimeStats::effective_spread, &econ::RegimeStats::depth,
    &econ::RegimeStats::price_impact,  &econ::RegimeStats::brier,            &econ::RegimeStats::noarb_gap,
    &econ::RegimeStats::ece};
const std::vector<std::string> kRegimeColumns{"quoted_spread", "effective_spread", "depth", "price_impact",
                                              "brier",         "noarb_gap",        "ece"};

}  // namespace

ReportData analyze(const Panel& panel, const ReportOptions& ropts) {
    ReportData d;
    const auto opts = ropts.estimation();
    d.regimes = econ::summarize_by_regime(panel, ropts.ece_bins, ropts.api_active_threshold);
    if (!d.regimes.high) d.notes.push_back("regime summary: no high-bundle rows");
    if (!d.regimes.low) d.notes.push_back("regime summary: no low-bundle rows");

    for (const auto& o : modular_outcomes()) d.modular.push_back(fit_row(panel, o, {"mm", "lip", "api"}, opts, d.notes));
    for (const auto& o : shock_outcomes())
        d.shock.push_back(fit_row(panel, o, {"shock", "mm_x_shock", "lip_x_shock", "api_x_shock"},
                                  [&] {
                                      auto x = opts;
                                      x.controls = {"mm", "lip", "api", "local_vol"};
                                      return x;
                                  }(),
                                  d.notes));

    for (const auto& sg : econ::all_subgroups()) {
        SubgroupRow row{sg, {}, {}, {}, {}};
        const auto mask = econ::subgroup_mask(panel, sg);
        std::vector<std::string> local;
        const auto s = fit_row(panel, "quoted_spread", {"mm", "lip", "api"}, opts, local, mask);
        const auto i = fit_row(panel, "price_impact", {"mm", "lip", "api"}, opts, local, mask);
        row.spread = s.coef[0];
        row.spread_se = s.se[0];
        row.impact = i.coef[0];
        row.impact_se = i.se[0];
        for (auto& n : local) d.notes.push_back(std::string(econ::subgroup_label(sg)) + ": " + n);
        d.subgroups.push_back(row);
    }

    d.costs = welfare::archetype_cost_table(panel, ropts.api_active_threshold);
    try {
        d.pass_through = welfare::pass_through_table(panel, ropts.delta_method, opts);
    } catch (const std::exception& e) {
        d.notes.push_back(std::string("pass-through: ") + e.what());
    }
    try {
        d.welfare = welfare::welfare_decomposition(panel, opts);
    } catch (const std::exception& e) {
        d.notes.push_back(std::string("welfare decomposition: ") + e.what());
    }

    for (const auto& o : event_outcomes())
        d.events.push_back(econ::event_study(panel, o, ropts.event_k_pre, ropts.event_k_post));
    try {
        d.event_post = econ::event_study_post_average(panel, "quoted_spread", ropts.event_k_post);
    } catch (const econ::EstimationError& e) {
        d.notes.push_back(std::string("event study: ") + e.what());
    }
    return d;
}

std::vector<Artifact> render(const ReportData& d, const ReportOptions& opts) {
    std::vector<Artifact> out;
    std::string text;

    // Regime summary.
    {
        std::vector<std::string> header{"regime"};
        for (const auto& c : kRegimeColumns) header.push_back(c);
        header.push_back("rows");
        io::CsvWriter w(header);
        std::vector<std::vector<std::string>> t{header};
        auto regime_row = [&](const std::string& name, const std::optional<econ::RegimeStats>& s) {
            std::vector<std::string> r{name};
            for (std::size_t k = 0; k < kRegimeColumns.size(); ++k) r.push_back(s ? fixed(regime_field(*s, k)) : "");
            r.push_back(s ? std::to_string(s->rows) : "0");
            w.row(r);
            t.push_back(r);
        };
        regime_row("low_bundle", d.regimes.low);
        regime_row("high_bundle", d.regimes.high);
        std::vector<std::string> pct{"pct_change"};
        for (auto f : kRegimeFields) pct.push_back(opt_fixed(d.regimes.pct_change(f), 2));
        pct.push_back("");
        w.row(pct);
        t.push_back(pct);
        out.push_back({"table2_summary.csv", w.str()});
        text += aligned("Summary statistics by institutional-liquidity bundle", t);
    }

    auto coef_table = [&](const std::string& file, const std::string& title, const std::vector<CoefRow>& rows) {
        if (rows.empty()) return;
        std::vector<std::string> header{"outcome"};
        for (const auto& c : rows.front().columns) {
            header.push_back(c + "_coef");
            header.push_back(c + "_se");
            header.push_back(c + "_stars");
        }
        header.push_back("n");
        header.push_back("clusters");
        io::CsvWriter w(header);
        std::vector<std::vector<std::string>> t;
        std::vector<std::string> th{"outcome"};
        for (const auto& c : rows.front().columns) th.push_back(c);
        th.push_back("N");
        t.push_back(th);
        for (const auto& r : rows) {
            std::vector<std::string> cells{r.outcome}, tc{r.outcome};
            for (std::size_t j = 0; j < r.columns.size(); ++j) {
                cells.push_back(opt_fixed(r.coef[j]));
                cells.push_back(opt_fixed(r.se[j]));
                cells.push_back(stars_of(r.coef[j], r.se[j]));
                tc.push_back(coef_cell(r.coef[j], r.se[j]));
            }
            cells.push_back(std::to_string(r.n));
            cells.push_back(std::to_string(r.clusters));
            tc.push_back(std::to_string(r.n));
            w.row(cells);
            t.push_back(tc);
        }
        out.push_back({file, w.str()});
        text += aligned(title, t);
    };
    coef_table("table3_modular.csv", "Channel coefficients (two-way fixed effects, market-clustered SE)", d.modular);
    coef_table("table4_shock.csv", "Shock-state interaction coefficients", d.shock);

    // Archetype costs.
    {
        std::vector<std::string> header{"archetype"};
        for (std::size_t c = 0; c < welfare::kCellCount; ++c) {
            auto l = welfare::cell_label(c);
            l[l.find('/')] = '_';
            header.push_back(l);
        }
        for (std::size_t c = 0; c < welfare::kCellCount; ++c) {
            auto l = welfare::cell_label(c);
            l[l.find('/')] = '_';
            header.push_back("n_" + l);
        }
        io::CsvWriter w(header);
        std::vector<std::vector<std::string>> t{{"archetype", "calm/low", "calm/high", "shock/low", "shock/high"}};
        for (auto a : kAllArchetypes) {
            const auto& cells = d.costs.cells[static_cast<std::size_t>(a)];
            std::vector<std::string> r{std::string(archetype_key(a))}, tr{std::string(to_string(a))};
            for (const auto& c : cells) {
                r.push_back(c ? fixed(c->mean_cost) : "");
                tr.push_back(c ? fixed(c->mean_cost, 3) : "-");
            }
            for (const auto& c : cells) r.push_back(c ? std::to_string(c->count) : "0");
            w.row(r);
            t.push_back(tr);
        }
        out.push_back({"table5_welfare.csv", w.str()});
        text += aligned("Execution-cost proxy by trader archetype (cents)", t);
    }

    // Subgroups.
    {
        io::CsvWriter w({"subgroup", "spread_coef", "spread_se", "impact_coef", "impact_se"});
        std::vector<std::vector<std::string>> t{{"subgroup", "spread", "impact"}};
        for (const auto& r : d.subgroups) {
            const std::string label(econ::subgroup_label(r.subgroup));
            w.row({label, opt_fixed(r.spread), opt_fixed(r.spread_se), opt_fixed(r.impact), opt_fixed(r.impact_se)});
            t.push_back({label, coef_cell(r.spread, r.spread_se), coef_cell(r.impact, r.impact_se)});
        }
        out.push_back({"table6_heterogeneity.csv", w.str()});
        text += aligned("Market-maker coefficient by subgroup", t);
    }

    // Pass-through and shock wedge.
    {
        io::CsvWriter w({"group", "state", "delta_effective", "delta_quoted", "pass_through", "shock_wedge"});
        std::vector<std::vector<std::string>> t{{"group", "state", "d_eff", "d_quoted", "PT", "SW"}};
        for (const auto& r : d.pass_through) {
            const std::string g(archetype_key(r.group));
            auto emit = [&](const std::string& state, double de, double dq, const std::optional<double>& pt,
                            const std::optional<double>& sw) {
                w.row({g, state, fixed(de), fixed(dq), opt_fixed(pt), opt_fixed(sw)});
                t.push_back({g, state, fixed(de, 3), fixed(dq, 3), pt ? fixed(*pt, 3) : "-", sw ? fixed(*sw, 3) : ""});
            };
            emit("pooled", r.delta_eff, r.delta_quoted, r.pt, std::nullopt);
            emit("calm", r.by_state.delta_eff[0], r.by_state.delta_quoted[0], r.pt_state[0], std::nullopt);
            emit("shock", r.by_state.delta_eff[1], r.by_state.delta_quoted[1], r.pt_state[1], r.sw);
        }
        out.push_back({"pass_through.csv", w.str()});
        text += aligned("Pass-through of quoted-spread gains and shock wedge", t);
    }

    // Welfare decomposition.
    {
        io::CsvWriter w({"component", "value_cents", "se", "identification", "source"});
        std::string rep = "Welfare decomposition: change from low to high bundle, cents per trade\n";
        rep += "Convention: per-trade cents-equivalents; positive values are gains to the named party.\n\n";
        std::vector<std::vector<std::string>> t{{"component", "value", "se", "identification"}};
        if (d.welfare) {
            for (const auto& c : d.welfare->components) {
                w.row({c.name, fixed(c.value), fixed(c.se), std::string(welfare::to_string(c.identification)), c.source});
                t.push_back({c.name, fixed(c.value, 4), fixed(c.se, 4), std::string(welfare::to_string(c.identification))});
            }
            t.push_back({"total", fixed(d.welfare->total(), 4), "", "mixes identified and ground-truth terms"});
        } else {
            t.push_back({"(not available)", "", "", ""});
        }
        rep += aligned("", t).substr(1);
        if (d.welfare)
            for (const auto& c : d.welfare->components) rep += c.name + ": " + c.source + "\n";
        out.push_back({"welfare_decomposition.csv", w.str()});
        out.push_back({"welfare_report.txt", rep});
        text += aligned("Welfare decomposition (cents per trade)", t);
    }

    // Event study.
    {
        io::CsvWriter w({"outcome", "k", "diff", "se", "treated_change", "control_change", "n_treated", "missing"});
        std::vector<std::vector<std::string>> t{{"k"}};
        for (const auto& s : d.events) t[0].push_back(s.outcome);
        for (const auto& s : d.events) {
            for (const auto& p : s.points) {
                w.row({s.outcome, std::to_string(p.k), p.missing ? "" : fixed(p.diff), p.missing ? "" : fixed(p.se),
                       p.missing ? "" : fixed(p.treated_change), p.missing ? "" : fixed(p.control_change),
                       std::to_string(p.n_treated), p.missing ? "1" : "0"});
            }
        }
        if (!d.events.empty()) {
            for (const auto& p : d.events.front().points) {
                std::vector<std::string> r{std::to_string(p.k)};
                for (const auto& s : d.events) {
                    const auto* q = s.at(p.k);
                    r.push_back(q && !q->missing ? coef_cell(q->diff, q->se) : "-");
                }
                t.push_back(r);
            }
        }
        out.push_back({"event_study.csv", w.str()});
        std::string title = "Event study around market-maker activation (not-yet-treated controls)";
        if (d.event_post)
            title += "\npost-period quoted-spread average: " + fixed(d.event_post->mean, 3) + " (" +
                     fixed(d.event_post->se, 3) + ")";
        text += aligned(title, t);
    }

    // Calibration bins.
    {
        io::CsvWriter w({"regime", "bin_lo", "bin_hi", "count", "mean_forecast", "frequency"});
        for (auto [name, s] : {std::pair{"low_bundle", &d.regimes.low}, {"high_bundle", &d.regimes.high}}) {
            if (!*s) continue;
            for (const auto& b : (*s)->calibration.bins)
                w.row({name, fixed(b.lo), fixed(b.hi), std::to_string(b.count), b.count ? fixed(b.mean_forecast) : "",
                       b.count ? fixed(b.frequency) : ""});
        }
        out.push_back({"calibration.csv", w.str()});
    }

    if (!d.notes.empty()) {
        text += "Notes\n";
        for (const auto& n : d.notes) text += "- " + n + "\n";
    }
    out.push_back({"tables.txt", text});

    // Figures.
    auto event_panel = [&](const econ::EventStudySeries& s, const std::string& title, const std::string& ylabel) {
        svg::Series line{"MM activation", {}, {}, {}, {}, true};
        for (const auto& p : s.points) {
            if (p.missing) continue;
            line.x.push_back(p.k);
            line.y.push_back(p.diff);
            line.lo.push_back(p.diff - 1.96 * p.se);
            line.hi.push_back(p.diff + 1.96 * p.se);
        }
        svg::LinePanel pn{title, "periods relative to activation", ylabel, {line}, 0.0, -0.5, false, {}, {}};
        return pn;
    };
    auto find_event = [&](const std::string& name) -> const econ::EventStudySeries& {
        for (const auto& s : d.events)
            if (s.outcome == name) return s;
        return d.events.front();
    };
    if (!d.events.empty()) {
        out.push_back({"fig_event_spread_depth.svg",
                       svg::line_chart("Event study: spread and depth",
                                       {event_panel(find_event("quoted_spread"), "Quoted spread", "cents"),
                                        event_panel(find_event("log_depth"), "Log depth", "log contracts")})});
        out.push_back({"fig_event_impact_brier.svg",
                       svg::line_chart("Event study: price impact and Brier score",
                                       {event_panel(find_event("price_impact"), "Price impact", "bps"),
                                        event_panel(find_event("brier"), "Brier score", "squared error")})});
    }
    {
        svg::LinePanel pn{"Reliability", "forecast probability", "empirical frequency", {}, {}, {}, true,
                          std::pair{0.0, 1.0}, std::pair{0.0, 1.0}};
        for (auto [name, s] : {std::pair{"Low bundle", &d.regimes.low}, {"High bundle", &d.regimes.high}}) {
            if (!*s) continue;
            svg::Series line{std::string(name) + " (ECE " + fixed((*s)->ece, 3) + ")", {}, {}, {}, {}, true};
            for (const auto& b : (*s)->calibration.bins) {
                if (!b.count) continue;
                line.x.push_back(b.mean_forecast);
                line.y.push_back(b.frequency);
            }
            pn.series.push_back(line);
        }
        out.push_back({"fig_calibration.svg", svg::line_chart("Calibration by bundle (" + std::to_string(opts.ece_bins) +
                                                                  " equal-width bins)",
                                                              {pn})});
    }
    {
        svg::BarPanel pn{"Market-maker coefficient by subgroup", "coefficient", {"Spread", "Impact"}, {}};
        for (const auto& r : d.subgroups)
            pn.groups.push_back({std::string(econ::subgroup_label(r.subgroup)),
                                 {r.spread.value_or(0.0), r.impact.value_or(0.0)}});
        out.push_back({"fig_heterogeneity.svg", svg::bar_chart("Heterogeneity of the market-maker effect", {pn})});
    }
    {
        svg::BarPanel costs{"Execution cost by archetype", "cents", {"calm/low", "calm/high", "shock/low", "shock/high"}, {}};
        for (auto a : kAllArchetypes) {
            svg::BarGroup g{std::string(to_string(a)), {}};
            for (const auto& c : d.costs.cells[static_cast<std::size_t>(a)]) g.values.push_back(c ? c->mean_cost : 0.0);
            costs.groups.push_back(g);
        }
        svg::BarPanel pt{"Pass-through by shock state", "PT", {"calm", "shock"}, {}};
        for (const auto& r : d.pass_through)
            pt.groups.push_back({std::string(to_string(r.group)), {r.pt_state[0].value_or(0.0), r.pt_state[1].value_or(0.0)}});
        out.push_back({"fig_welfare.svg", svg::bar_chart("Welfare incidence", {costs, pt})});
    }
    return out;
}

std::string manifest_json(const RunConfig& cfg, const std::vector<Artifact>& artifacts,
                          const std::vector<std::pair<std::string, std::string>>& inputs,
                          const std::vector<StageTiming>& timings) {
    nlohmann::ordered_json j;
    j["tool"] = "pmlab";
    j["version"] = kToolVersion;
    j["seed"] = cfg.sim.seed;
    nlohmann::ordered_json c = nlohmann::ordered_json::object();
    for (const auto& [k, v] : config_entries(cfg))
        if (k != "threads") c[k] = v;  // outputs do not depend on it
    j["config"] = c;
    nlohmann::ordered_json in = nlohmann::ordered_json::array();
    for (const auto& [path, hash] : inputs) in.push_back({{"path", path}, {"sha256", hash}});
    j["inputs"] = in;
    nlohmann::ordered_json arts = nlohmann::ordered_json::array();
    for (const auto& a : artifacts)
        arts.push_back({{"path", a.name}, {"sha256", io::sha256_hex(a.bytes)}, {"bytes", a.bytes.size()}});
    j["artifacts"] = arts;
    if (!timings.empty()) {
        nlohmann::ordered_json t = nlohmann::ordered_json::object();
        for (const auto& s : timings) t[s.stage] = s.seconds;
        j["timings_seconds"] = t;
    }
    return j.dump(2) + "\n";
}

}  // namespace pmlab::report
