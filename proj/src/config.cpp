#include "pmlab/config.hpp"

#include <algorithm>
#include <charconv>
#include <functional>
#include <sstream>

namespace pmlab {

using sim::ConfigError;

econ::EstimationOptions ReportOptions::estimation() const {
    econ::EstimationOptions o;
    o.api_threshold = api_active_threshold;
    o.local_vol_window = local_vol_window;
    o.controls = shock_control ? std::vector<std::string>{"shock", "local_vol"} : std::vector<std::string>{"local_vol"};
    return o;
}

void RunConfig::validate() const {
    sim.validate();
    if (report.ece_bins < 2) throw ConfigError("ece_bins: need at least 2 bins", "ece_bins");
    if (report.local_vol_window < 3) throw ConfigError("local_vol_window: need at least 3 periods", "local_vol_window");
    if (report.event_k_pre < 2) throw ConfigError("event_k_pre: need at least 2 pre-periods", "event_k_pre");
    if (report.event_k_post < 0) throw ConfigError("event_k_post: must be non-negative", "event_k_post");
    if (report.api_active_threshold <= 0.0 || report.api_active_threshold > 1.0)
        throw ConfigError("api_active_threshold: must lie in (0,1]", "api_active_threshold");
}

namespace {

struct Field {
    std::string key;
    std::function<void(std::string_view)> set;
    std::function<std::string()> get;
};

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, std::string_view value, std::string_view want) {
    throw ConfigError(key + ": cannot parse '" + std::string(value) + "' as " + std::string(want), key);
}

template <class T>
T parse_number(const std::string& key, std::string_view v, std::string_view want) {
    T out{};
    const auto* end = v.data() + v.size();
    auto [p, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc{} || p != end) bad_value(key, v, want);
    return out;
}

bool parse_bool(const std::string& key, std::string_view v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    bad_value(key, v, "boolean");
}

std::string fmt(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

template <class T>
std::string fmt_int(T v) {
    return std::to_string(v);
}

std::vector<Field> fields(RunConfig& c) {
    std::vector<Field> f;
    auto real = [&f](std::string key, double& ref) {
        f.push_back({key, [&ref, key](std::string_view v) { ref = parse_number<double>(key, v, "real"); },
                     [&ref] { return fmt(ref); }});
    };
    auto integer = [&f](std::string key, int& ref) {
        f.push_back({key, [&ref, key](std::string_view v) { ref = parse_number<int>(key, v, "integer"); },
                     [&ref] { return fmt_int(ref); }});
    };
    auto boolean = [&f](std::string key, bool& ref) {
        f.push_back({key, [&ref, key](std::string_view v) { ref = parse_bool(key, v); },
                     [&ref] { return std::string(ref ? "true" : "false"); }});
    };
    auto& s = c.sim;
    auto& r = c.report;

    integer("n_markets", s.n_markets);
    integer("n_periods", s.n_periods);
    f.push_back({"panel_size",
                 [&s](std::string_view v) {
                     if (v.empty()) s.panel_size.reset();
                     else s.panel_size = parse_number<long long>("panel_size", v, "integer");
                 },
                 [&s] { return s.panel_size ? std::to_string(*s.panel_size) : std::string(); }});
    f.push_back({"seed", [&s](std::string_view v) { s.seed = parse_number<std::uint64_t>("seed", v, "unsigned 64-bit integer"); },
                 [&s] { return std::to_string(s.seed); }});
    integer("threads", s.threads);

    real("never_treated_share", s.never_treated_share);
    integer("activation_lo", s.activation_lo);
    integer("activation_hi", s.activation_hi);
    real("mm_probability", s.mm_probability);
    real("lip_probability", s.lip_probability);
    real("api_probability", s.api_probability);
    integer("api_ramp_length", s.api_ramp_length);
    f.push_back({"api_active_threshold",
                 [&s, &r](std::string_view v) {
                     s.api_active_threshold = parse_number<double>("api_active_threshold", v, "real");
                     r.api_active_threshold = s.api_active_threshold;
                 },
                 [&s] { return fmt(s.api_active_threshold); }});
    integer("realized_horizon", s.realized_horizon);

    real("anchor_sd", s.anchor_sd);
    real("mean_reversion_lo", s.mean_reversion_lo);
    real("mean_reversion_hi", s.mean_reversion_hi);
    real("baseline_vol_lo", s.baseline_vol_lo);
    real("baseline_vol_hi", s.baseline_vol_hi);
    real("jump_intensity_lo", s.jump_intensity_lo);
    real("jump_intensity_hi", s.jump_intensity_hi);
    real("jump_size_scale", s.jump_size_scale);
    real("ece_target_noise", s.ece_target_noise);
    real("ambiguity_noise_weight", s.ambiguity_noise_weight);

    real("share_baseline", s.share_baseline);
    real("share_cap", s.share_cap);
    real("share_weight_mm", s.share_weights.mm);
    real("share_weight_lip", s.share_weights.lip);
    real("share_weight_api", s.share_weights.api);

    real("family_fraction", s.family_fraction);
    integer("family_size", s.family_size);

    boolean("calibrate", s.calibration.enabled);
    boolean("heterogeneity", s.effects.heterogeneity);

    for (std::size_t o = 0; o < sim::kLinearOutcomeCount; ++o) {
        const std::string name(sim::to_string(static_cast<sim::LinearOutcome>(o)));
        auto& e = s.effects.outcome[o];
        real("effect_" + name + "_mm", e.main.mm);
        real("effect_" + name + "_lip", e.main.lip);
        real("effect_" + name + "_api", e.main.api);
        real("effect_" + name + "_shock", e.shock);
        real("effect_" + name + "_mm_x_shock", e.shock_interaction.mm);
        real("effect_" + name + "_lip_x_shock", e.shock_interaction.lip);
        real("effect_" + name + "_api_x_shock", e.shock_interaction.api);
    }
    real("brier_shift_mm", s.effects.brier_shift.mm);
    real("brier_shift_lip", s.effects.brier_shift.lip);
    real("brier_shift_api", s.effects.brier_shift.api);

    for (std::size_t a = 0; a < sim::kAttributeCount; ++a) {
        const std::string attr(sim::to_string(static_cast<sim::Attribute>(a)));
        real("subgroup_spread_" + attr + "_high", s.effects.spread_subgroups[a][0]);
        real("subgroup_spread_" + attr + "_low", s.effects.spread_subgroups[a][1]);
        real("subgroup_impact_" + attr + "_high", s.effects.impact_subgroups[a][0]);
        real("subgroup_impact_" + attr + "_low", s.effects.impact_subgroups[a][1]);
    }

    for (std::size_t o = 0; o < sim::kLinearOutcomeCount; ++o) {
        const std::string name(sim::to_string(static_cast<sim::LinearOutcome>(o)));
        auto& b = s.bases[o];
        real("level_" + name, b.level);
        real("market_sd_" + name, b.market_sd);
        real("seasonal_" + name, b.seasonal_amp);
        real("drift_" + name, b.drift);
        real("noise_" + name, b.noise_sd);
    }
    real("noise_archetype_cost", s.archetype_noise_sd);
    for (auto a : kAllArchetypes) {
        const std::string key(archetype_key(a));
        auto& m = s.archetype_models[static_cast<std::size_t>(a)];
        real("archetype_" + key + "_base", m.base);
        real("archetype_" + key + "_share_loading", m.share_loading);
        real("archetype_" + key + "_shock_premium", m.shock_premium);
        real("archetype_" + key + "_shock_share_loading", m.shock_share_loading);
    }

    auto& t = s.calibration;
    for (auto [name, tgt] : {std::pair<const char*, sim::RegimeTarget*>{"quoted_spread", &t.quoted_spread},
                             {"effective_spread", &t.effective_spread},
                             {"depth", &t.depth},
                             {"price_impact", &t.price_impact},
                             {"noarb_gap", &t.noarb_gap}}) {
        real(std::string("target_") + name + "_low", tgt->low);
        real(std::string("target_") + name + "_high", tgt->high);
    }
    for (auto a : kAllArchetypes) {
        auto& cells = t.archetype_cells[static_cast<std::size_t>(a)];
        for (std::size_t cidx = 0; cidx < welfare::kCellCount; ++cidx) {
            auto label = welfare::cell_label(cidx);
            label[label.find('/')] = '_';
            real("target_cost_" + std::string(archetype_key(a)) + "_" + label, cells[cidx]);
        }
    }

    integer("ece_bins", r.ece_bins);
    boolean("shock_control", r.shock_control);
    integer("local_vol_window", r.local_vol_window);
    integer("event_k_pre", r.event_k_pre);
    integer("event_k_post", r.event_k_post);
    f.push_back({"delta_method",
                 [&r](std::string_view v) {
                     if (v == "subsample") r.delta_method = welfare::DeltaMethod::Subsample;
                     else if (v == "interaction") r.delta_method = welfare::DeltaMethod::Interaction;
                     else bad_value("delta_method", v, "subsample|interaction");
                 },
                 [&r] {
                     return std::string(r.delta_method == welfare::DeltaMethod::Subsample ? "subsample" : "interaction");
                 }});
    return f;
}

}  // namespace

void set_config_value(RunConfig& cfg, std::string_view key, std::string_view value) {
    for (auto& f : fields(cfg)) {
        if (f.key == key) {
            f.set(trim(value));
            return;
        }
    }
    throw ConfigError("unknown config key '" + std::string(key) + "'", std::string(key));
}

RunConfig parse_config(std::istream& in) {
    RunConfig cfg;
    auto table = fields(cfg);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view v = line;
        if (auto hash = v.find('#'); hash != std::string_view::npos) v = v.substr(0, hash);
        v = trim(v);
        if (v.empty()) continue;
        const auto eq = v.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value", std::string(v));
        const auto key = trim(v.substr(0, eq));
        const auto value = trim(v.substr(eq + 1));
        auto it = std::find_if(table.begin(), table.end(), [&](const Field& f) { return f.key == key; });
        if (it == table.end())
            throw ConfigError("unknown config key '" + std::string(key) + "'", std::string(key));
        it->set(value);
    }
    cfg.validate();
    return cfg;
}

RunConfig parse_config_string(std::string_view text) {
    std::istringstream in{std::string(text)};
    return parse_config(in);
}

std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& cfg) {
    auto copy = cfg;
    std::vector<std::pair<std::string, std::string>> out;
    for (auto& f : fields(copy)) out.emplace_back(f.key, f.get());
    return out;
}

std::string dump_config(const RunConfig& cfg) {
    std::string out;
    for (const auto& [k, v] : config_entries(cfg)) out += k + " = " + v + "\n";
    return out;
}

}  // namespace pmlab
