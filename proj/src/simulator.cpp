#include "pmlab/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "pmlab/metrics.hpp"
#include "pmlab/parallel.hpp"

namespace pmlab::sim {

namespace {

// Stream purposes for market_stream().
enum : std::uint64_t {
    kAttributeStream = 1,
    kScheduleStream = 2,
    kPathStream = 3,
    kOutcomeStream = 4,
    kNoiseStream = 5,
    kFamilyStream = 6,
};
constexpr std::uint64_t kGlobalId = ~std::uint64_t{0};
constexpr std::uint64_t kNeverTreatedPurpose = 100;
constexpr std::uint64_t kFamilyAssignPurpose = 101;

double uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

double std_normal(std::mt19937_64& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

template <class T>
void shuffle_indices(std::vector<T>& v, std::mt19937_64& rng) {
    // Explicit Fisher-Yates so the permutation does not depend on the
    // standard library's shuffle implementation.
    for (std::size_t i = v.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(
            std::uniform_int_distribution<std::uint64_t>(0, i - 1)(rng));
        std::swap(v[i - 1], v[j]);
    }
}

SubgroupCoefficients spread_table() {
    return {{{-0.892, -0.541}, {-0.631, -0.847}, {-0.678, -0.812}, {-0.931, -0.573}}};
}

SubgroupCoefficients impact_table() {
    return {{{-1.021, -0.603}, {-0.744, -0.963}, {-0.756, -0.945}, {-1.088, -0.621}}};
}

}  // namespace

std::string_view to_string(Attribute a) {
    switch (a) {
    case Attribute::InfoDensity: return "info_density";
    case Attribute::Hedgeability: return "hedgeability";
    case Attribute::ResolutionClarity: return "resolution_clarity";
    case Attribute::BaselineVol: return "baseline_vol";
    }
    return "";
}

std::array<std::string_view, 2> band_labels(Attribute a) {
    switch (a) {
    case Attribute::InfoDensity: return {"High info density", "Low info density"};
    case Attribute::Hedgeability: return {"High hedgeability", "Low hedgeability"};
    case Attribute::ResolutionClarity: return {"Clear resolution", "Ambiguous resolution"};
    case Attribute::BaselineVol: return {"High baseline vol", "Low baseline vol"};
    }
    return {"", ""};
}

double attribute_value(const MarketAttributes& attrs, Attribute a) {
    switch (a) {
    case Attribute::InfoDensity: return attrs.info_density;
    case Attribute::Hedgeability: return attrs.hedgeability;
    case Attribute::ResolutionClarity: return attrs.resolution_clarity;
    case Attribute::BaselineVol: return attrs.baseline_vol;
    }
    return 0.0;
}

std::string_view to_string(LinearOutcome o) {
    switch (o) {
    case LinearOutcome::QuotedSpread: return "quoted_spread";
    case LinearOutcome::EffectiveSpread: return "effective_spread";
    case LinearOutcome::AdverseSelection: return "adverse_selection";
    case LinearOutcome::LogDepth: return "log_depth";
    case LinearOutcome::PriceImpact: return "price_impact";
    case LinearOutcome::NoarbGap: return "noarb_gap";
    }
    return "";
}

DesignedEffects DesignedEffects::defaults() {
    DesignedEffects d;
    using O = LinearOutcome;
    d[O::QuotedSpread] = {{-0.734, -0.415, -0.337}, 1.2, {}};
    // Effective spread = adverse selection + realized spread; the shock and
    // interaction terms below are the sums of the two components.
    d[O::EffectiveSpread] = {{-0.988, -0.567, -0.472}, 1.021, {0.049, 0.008, 0.053}};
    d[O::AdverseSelection] = {{-0.20, -0.10, -0.05}, 0.507, {0.013, 0.008, 0.027}};
    d[O::LogDepth] = {{0.192, 0.125, 0.117}, -0.10, {}};
    d[O::PriceImpact] = {{-0.844, -0.468, -0.369}, 2.168, {-0.195, -0.006, 0.001}};
    d[O::NoarbGap] = {{-0.003, -0.001, -0.003}, 0.009, {}};
    d.brier_shift = {-0.0004, -0.0006, -0.0012};
    d.heterogeneity = true;
    d.spread_subgroups = spread_table();
    d.impact_subgroups = impact_table();
    return d;
}

DesignedEffects DesignedEffects::zero() {
    DesignedEffects d;
    d.heterogeneity = false;
    d.spread_subgroups = spread_table();
    d.impact_subgroups = impact_table();
    return d;
}

SimConfig::SimConfig() {
    using O = LinearOutcome;
    //                       level  mkt_sd  season  drift  noise
    base(O::QuotedSpread) = {7.0, 0.80, 0.15, 0.0, 0.60};
    base(O::EffectiveSpread) = {7.0, 0.80, 0.15, 0.0, 0.50};
    base(O::AdverseSelection) = {2.2, 0.30, 0.05, 0.0, 0.06};
    base(O::LogDepth) = {5.0, 0.25, 0.03, 0.0, 0.15};
    base(O::PriceImpact) = {13.0, 1.50, 0.20, 0.0, 0.35};
    base(O::NoarbGap) = {0.024, 0.003, 0.0005, 0.0, 0.002};
}

void SimConfig::validate() const {
    auto fail = [](const std::string& key, const std::string& why) {
        throw ConfigError(key + ": " + why, key);
    };
    if (n_markets < 2) fail("n_markets", "need at least 2 markets");
    if (n_periods < 3) fail("n_periods", "need at least 3 periods");
    if (panel_size && *panel_size != static_cast<long long>(n_markets) * n_periods)
        fail("panel_size", "n_markets x n_periods = " +
                               std::to_string(static_cast<long long>(n_markets) * n_periods) +
                               " does not match declared panel size " + std::to_string(*panel_size));
    if (!(never_treated_share >= 0.0 && never_treated_share <= 1.0))
        fail("never_treated_share", "must lie in [0,1]");
    if (activation_lo <= 0 || activation_hi >= n_periods || activation_lo > activation_hi)
        fail("activation_lo", "activation window must lie inside (0, n_periods)");
    for (auto [k, v] : {std::pair{"mm_probability", mm_probability}, {"lip_probability", lip_probability},
                        {"api_probability", api_probability}}) {
        if (!(v >= 0.0 && v <= 1.0)) fail(k, "must lie in [0,1]");
    }
    if (never_treated_share < 1.0 && mm_probability + lip_probability + api_probability <= 0.0)
        fail("mm_probability", "treated markets need at least one channel with positive probability");
    if (api_ramp_length < 1) fail("api_ramp_length", "must be positive");
    if (!(mean_reversion_lo > 0.0 && mean_reversion_hi < 1.0 && mean_reversion_lo <= mean_reversion_hi))
        fail("mean_reversion_lo", "range must lie inside (0,1)");
    if (!(baseline_vol_lo > 0.0 && baseline_vol_lo <= baseline_vol_hi))
        fail("baseline_vol_lo", "range must be positive");
    if (!(jump_intensity_lo >= 0.0 && jump_intensity_hi <= 1.0 && jump_intensity_lo <= jump_intensity_hi))
        fail("jump_intensity_lo", "range must lie inside [0,1]");
    if (jump_size_scale < 0.0) fail("jump_size_scale", "must be non-negative");
    if (anchor_sd < 0.0) fail("anchor_sd", "must be non-negative");
    if (!(ece_target_noise >= 0.0)) fail("ece_target_noise", "must be non-negative");
    if (ambiguity_noise_weight < 0.0) fail("ambiguity_noise_weight", "must be non-negative");
    {
        // Variance must stay positive with every channel fully on.
        const double v0 = ece_target_noise * ece_target_noise;
        const auto& s = effects.brier_shift;
        const double worst = v0 + std::min(0.0, s.mm) + std::min(0.0, s.lip) + std::min(0.0, s.api);
        if (ece_target_noise > 0.0 && worst <= 0.0)
            fail("brier_shift_api", "observation-noise variance would turn negative");
    }
    if (!(share_baseline >= 0.0 && share_cap <= 1.0 && share_baseline <= share_cap))
        fail("share_baseline", "need 0 <= baseline <= cap <= 1");
    if (!(family_fraction >= 0.0 && family_fraction <= 1.0)) fail("family_fraction", "must lie in [0,1]");
    if (family_size < 2) fail("family_size", "families need at least 2 contracts");
    for (std::size_t o = 0; o < kLinearOutcomeCount; ++o) {
        if (bases[o].noise_sd < 0.0 || bases[o].market_sd < 0.0)
            fail("noise_" + std::string(to_string(static_cast<LinearOutcome>(o))), "scales must be non-negative");
    }
    if (archetype_noise_sd < 0.0) fail("noise_archetype_cost", "must be non-negative");
    if (api_active_threshold <= 0.0 || api_active_threshold > 1.0)
        fail("api_active_threshold", "must lie in (0,1]");
    if (realized_horizon < 1) fail("realized_horizon", "must be at least 1 period");
}

void SimConfig::zero_residual_noise() {
    for (auto& b : bases) b.noise_sd = 0.0;
    archetype_noise_sd = 0.0;
}

ObservationNoise observation_noise(const SimConfig& cfg) {
    return {cfg.ece_target_noise, cfg.ambiguity_noise_weight, cfg.effects.brier_shift};
}

std::mt19937_64 market_stream(std::uint64_t seed, std::uint64_t market, std::uint64_t purpose) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(market), static_cast<std::uint32_t>(market >> 32),
                      static_cast<std::uint32_t>(purpose)};
    return std::mt19937_64(seq);
}

double step_belief(double x, const MarketAttributes& attrs, double jump, double noise_draw) {
    return x - attrs.mean_reversion * (x - attrs.anchor_logodds) + attrs.baseline_vol * noise_draw + jump;
}

int draw_outcome(const MarketAttributes& attrs, std::mt19937_64& rng) {
    const double q = logistic(attrs.anchor_logodds);
    return uniform(rng, 0.0, 1.0) < q ? 1 : 0;
}

double observation_noise_sd(const ObservationNoise& p, double api_intensity, double resolution_clarity,
                            bool mm_active, bool lip_active) {
    const double base = p.base_sd * p.base_sd * (1.0 + p.ambiguity_weight * (1.0 - resolution_clarity));
    const double v = base + p.variance_shift.mm * mm_active + p.variance_shift.lip * lip_active +
                     p.variance_shift.api * api_intensity;
    return v > 0.0 ? std::sqrt(v) : 0.0;
}

double observe_probability(double x, double api_intensity, double resolution_clarity, double noise_draw,
                           const ObservationNoise& p, bool mm_active, bool lip_active) {
    const double sd = observation_noise_sd(p, api_intensity, resolution_clarity, mm_active, lip_active);
    return std::clamp(logistic(x) + sd * noise_draw, kProbFloor, kProbCeil);
}

double professional_share(const ShareParams& p, bool mm_active, bool lip_active, double api_intensity) {
    const double load = p.weights.mm * mm_active + p.weights.lip * lip_active + p.weights.api * api_intensity;
    // 2*logistic(load) - 1 maps [0, inf) onto [0, 1).
    const double sat = 2.0 * logistic(load) - 1.0;
    return std::min(1.0, p.baseline + (p.cap - p.baseline) * sat);
}

double professional_share_path(const ShareParams& p, const TreatmentSchedule& schedule, int t) {
    return professional_share(p, schedule.mm_active(t), schedule.lip_active(t), schedule.api_intensity(t));
}

std::vector<TreatmentSchedule> assign_treatments(const SimConfig& cfg) {
    const auto m = static_cast<std::size_t>(cfg.n_markets);
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto global = market_stream(cfg.seed, kGlobalId, kNeverTreatedPurpose);
    shuffle_indices(order, global);

    const auto n_never = static_cast<std::size_t>(std::llround(cfg.never_treated_share * static_cast<double>(m)));
    std::vector<bool> never(m, false);
    for (std::size_t i = 0; i < std::min(n_never, m); ++i) never[order[i]] = true;

    std::vector<TreatmentSchedule> out(m);
    for (std::size_t i = 0; i < m; ++i) {
        auto& s = out[i];
        s.api_ramp_length = cfg.api_ramp_length;
        if (never[i]) continue;
        auto rng = market_stream(cfg.seed, i, kScheduleStream);
        std::uniform_int_distribution<int> when(cfg.activation_lo, cfg.activation_hi);
        // Redraw until at least one channel is present so that the
        // never-treated count stays exact.
        do {
            s.mm_activation.reset();
            s.lip_activation.reset();
            s.api_adoption.reset();
            const double u_mm = uniform(rng, 0.0, 1.0), u_lip = uniform(rng, 0.0, 1.0),
                         u_api = uniform(rng, 0.0, 1.0);
            const int t_mm = when(rng), t_lip = when(rng), t_api = when(rng);
            if (u_mm < cfg.mm_probability) s.mm_activation = t_mm;
            if (u_lip < cfg.lip_probability) s.lip_activation = t_lip;
            if (u_api < cfg.api_probability) s.api_adoption = t_api;
        } while (s.never_treated());
    }
    return out;
}

double RowDesign::time_base(LinearOutcome o, int t) const {
    const auto& b = bases[static_cast<std::size_t>(o)];
    const double T = static_cast<double>(n_periods);
    const double season = std::sin(2.0 * std::numbers::pi * 1.5 * t / T);
    const double trend = static_cast<double>(t) / (T - 1.0) - 0.5;
    return b.level + b.seasonal_amp * season + b.drift * trend;
}

double treatment_component(const DesignedEffects& effects, LinearOutcome o, const MarketContext& market,
                           bool mm, bool lip, double api, bool shock) {
    const auto& e = effects[o];
    double mult = 1.0;
    if (o == LinearOutcome::QuotedSpread || o == LinearOutcome::EffectiveSpread)
        mult = market.spread_multiplier;
    else if (o == LinearOutcome::PriceImpact)
        mult = market.impact_multiplier;
    double v = e.main.mm * mult * mm + e.main.lip * lip + e.main.api * api;
    if (shock) {
        v += e.shock + e.shock_interaction.mm * mm + e.shock_interaction.lip * lip +
             e.shock_interaction.api * api;
    }
    return v;
}

namespace {

double linear_predictor(const RowDesign& design, const MarketContext& market, LinearOutcome o, int t,
                        bool mm, bool lip, double api, bool shock) {
    return design.time_base(o, t) + market.market_effect[static_cast<std::size_t>(o)] +
           treatment_component(design.effects, o, market, mm, lip, api, shock);
}

}  // namespace

double horizon_factor(double kappa, int horizon) {
    if (horizon == metrics::kDefaultHorizon) return 1.0;
    const double keep = 1.0 - kappa;
    return (1.0 - std::pow(keep, horizon)) / (1.0 - std::pow(keep, metrics::kDefaultHorizon));
}

PanelRow gen_row(const MarketContext& market, const PeriodState& state, const RowNoise& noise,
                 const RowDesign& design) {
    using O = LinearOutcome;
    const auto& sched = market.spec.schedule;
    PanelRow r;
    r.market_id = market.spec.market_id;
    r.t = state.t;
    r.latent_logodds = state.latent;
    r.true_prob = logistic(state.latent);
    r.observed_prob = state.observed_prob;
    r.shock = state.shock;
    r.mm_active = sched.mm_active(state.t);
    r.lip_active = sched.lip_active(state.t);
    r.api_intensity = sched.api_intensity(state.t);
    r.professional_share = professional_share(design.share, r.mm_active, r.lip_active, r.api_intensity);
    r.family_id = market.spec.family_id;

    std::array<double, kLinearOutcomeCount> v{};
    for (std::size_t o = 0; o < kLinearOutcomeCount; ++o) {
        v[o] = linear_predictor(design, market, static_cast<O>(o), state.t, r.mm_active, r.lip_active,
                                r.api_intensity, r.shock) +
               noise.outcome[o];
    }
    r.quoted_spread = std::max(v[static_cast<std::size_t>(O::QuotedSpread)], kTickCents);
    r.effective_spread = std::max(v[static_cast<std::size_t>(O::EffectiveSpread)], 0.0);
    r.adverse_selection = v[static_cast<std::size_t>(O::AdverseSelection)] *
                          horizon_factor(market.spec.attrs.mean_reversion, design.realized_horizon);
    // Realized spread is whatever remains of the effective spread once the
    // adverse-selection component is taken out.
    r.realized_spread = r.effective_spread - r.adverse_selection;
    r.depth = std::exp(v[static_cast<std::size_t>(O::LogDepth)]);
    r.price_impact = v[static_cast<std::size_t>(O::PriceImpact)];

    const double gap = v[static_cast<std::size_t>(O::NoarbGap)];
    // Each side takes the gap in proportion to its headroom, so the pair
    // stays inside (0,1) without clipping and yes + no - 1 == gap.
    r.yes_price = std::clamp(r.observed_prob + gap * (1.0 - r.observed_prob), 1e-6, 1.0 - 1e-6);
    r.no_price = std::clamp(1.0 - r.observed_prob + gap * r.observed_prob, 1e-6, 1.0 - 1e-6);

    for (std::size_t a = 0; a < kArchetypeCount; ++a) {
        const auto& m = design.archetype_models[a];
        double cost = r.effective_spread + m.base + m.share_loading * r.professional_share;
        if (r.shock) cost += m.shock_premium + m.shock_share_loading * r.professional_share;
        r.archetype_costs[a] = cost + noise.archetype[a];
    }
    return r;
}

namespace {

MarketAttributes draw_attributes(const SimConfig& cfg, std::mt19937_64& rng) {
    MarketAttributes a;
    a.category = static_cast<Category>(std::uniform_int_distribution<int>(0, 3)(rng));
    a.info_density = uniform(rng, 0.0, 1.0);
    a.hedgeability = uniform(rng, 0.0, 1.0);
    a.resolution_clarity = uniform(rng, 0.0, 1.0);
    a.baseline_vol = uniform(rng, cfg.baseline_vol_lo, cfg.baseline_vol_hi);
    a.anchor_logodds = cfg.anchor_sd * std_normal(rng);
    a.mean_reversion = uniform(rng, cfg.mean_reversion_lo, cfg.mean_reversion_hi);
    a.jump_intensity = uniform(rng, cfg.jump_intensity_lo, cfg.jump_intensity_hi);
    return a;
}

// Groups a fraction of markets into families of mutually exclusive contracts:
// anchors are renormalized to sum to one and exactly one member resolves YES.
void assign_families(const SimConfig& cfg, std::vector<MarketSpec>& markets) {
    const auto m = markets.size();
    const auto size = static_cast<std::size_t>(cfg.family_size);
    const auto n_fam = static_cast<std::size_t>(cfg.family_fraction * static_cast<double>(m)) / size;
    if (n_fam == 0) return;
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto global = market_stream(cfg.seed, kGlobalId, kFamilyAssignPurpose);
    shuffle_indices(order, global);

    for (std::size_t f = 0; f < n_fam; ++f) {
        std::vector<std::size_t> members(order.begin() + static_cast<std::ptrdiff_t>(f * size),
                                         order.begin() + static_cast<std::ptrdiff_t>((f + 1) * size));
        std::sort(members.begin(), members.end());
        double total = 0.0;
        for (auto i : members) total += logistic(markets[i].attrs.anchor_logodds);
        auto rng = market_stream(cfg.seed, f, kFamilyStream);
        const double u = uniform(rng, 0.0, 1.0);
        double cum = 0.0;
        bool resolved = false;
        for (auto i : members) {
            const double q = logistic(markets[i].attrs.anchor_logodds) / total;
            markets[i].attrs.anchor_logodds = logit(q);
            markets[i].family_id = static_cast<int>(f);
            cum += q;
            markets[i].outcome = (!resolved && u < cum) ? 1 : 0;
            if (markets[i].outcome == 1) resolved = true;
        }
        if (!resolved) markets[members.back()].outcome = 1;
    }
}

std::array<double, kAttributeCount> attribute_medians(const std::vector<MarketSpec>& markets) {
    std::array<double, kAttributeCount> med{};
    for (std::size_t a = 0; a < kAttributeCount; ++a) {
        std::vector<double> v;
        v.reserve(markets.size());
        for (const auto& m : markets) v.push_back(attribute_value(m.attrs, static_cast<Attribute>(a)));
        std::sort(v.begin(), v.end());
        const auto n = v.size();
        med[a] = n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    }
    return med;
}

// 1 + sum over attributes of the band deviation from the pair mean, relative
// to the full-sample coefficient.
double heterogeneity_multiplier(const SubgroupCoefficients& table, double full_effect,
                                const MarketAttributes& attrs, const std::array<double, kAttributeCount>& med) {
    if (full_effect == 0.0) return 1.0;
    double mult = 1.0;
    for (std::size_t a = 0; a < kAttributeCount; ++a) {
        const bool high = attribute_value(attrs, static_cast<Attribute>(a)) > med[a];
        const double centre = 0.5 * (table[a][0] + table[a][1]);
        mult += (table[a][high ? 0 : 1] - centre) / full_effect;
    }
    return mult;
}

struct MarketPath {
    std::vector<PeriodState> states;
    std::vector<RowNoise> noise;
};

MarketPath simulate_path(const SimConfig& cfg, const MarketSpec& spec, const ObservationNoise& obs) {
    const auto T = static_cast<std::size_t>(cfg.n_periods);
    const auto& a = spec.attrs;
    MarketPath path;
    path.states.resize(T);
    path.noise.resize(T);

    auto rng = market_stream(cfg.seed, static_cast<std::uint64_t>(spec.market_id), kPathStream);
    auto noise_rng = market_stream(cfg.seed, static_cast<std::uint64_t>(spec.market_id), kNoiseStream);

    const double persistence = 1.0 - a.mean_reversion;
    const double stationary_sd = a.baseline_vol / std::sqrt(1.0 - persistence * persistence);
    double x = a.anchor_logodds + stationary_sd * std_normal(rng);
    for (std::size_t t = 0; t < T; ++t) {
        auto& st = path.states[t];
        st.t = static_cast<int>(t);
        // Every draw is taken unconditionally so that paths line up across
        // configurations that differ only in effect sizes or noise scales.
        const double u_jump = uniform(rng, 0.0, 1.0);
        const double jump_size = cfg.jump_size_scale * std_normal(rng);
        const double eps = std_normal(rng);
        const double obs_draw = std_normal(rng);
        if (t > 0) {
            st.shock = u_jump < a.jump_intensity;
            x = step_belief(x, a, st.shock ? jump_size : 0.0, eps);
        }
        st.latent = x;
        const auto& s = spec.schedule;
        st.observed_prob = observe_probability(x, s.api_intensity(st.t), a.resolution_clarity, obs_draw, obs,
                                               s.mm_active(st.t), s.lip_active(st.t));

        auto& nz = path.noise[t];
        for (std::size_t o = 0; o < kLinearOutcomeCount; ++o) nz.outcome[o] = cfg.bases[o].noise_sd * std_normal(noise_rng);
        for (std::size_t k = 0; k < kArchetypeCount; ++k) nz.archetype[k] = cfg.archetype_noise_sd * std_normal(noise_rng);
    }
    return path;
}

struct CellAccumulator {
    double sum = 0.0;
    double n = 0.0;
    void add(double v) { sum += v; n += 1.0; }
    double mean() const { return n > 0 ? sum / n : 0.0; }
};

// Solves level and drift of a linear outcome so that its noise-free regime
// means hit the targets.
void calibrate_linear(OutcomeBase& base, const std::vector<double>& z, const std::vector<double>& tau,
                      const std::vector<bool>& high, RegimeTarget target) {
    CellAccumulator zl, zh, tl, th;
    for (std::size_t i = 0; i < z.size(); ++i) {
        (high[i] ? zh : zl).add(z[i]);
        (high[i] ? th : tl).add(tau[i]);
    }
    if (zl.n == 0) return;
    if (zh.n == 0 || std::abs(th.mean() - tl.mean()) < 1e-9) {
        base.level = target.low - zl.mean() - base.drift * tl.mean();
        return;
    }
    base.drift = ((target.high - zh.mean()) - (target.low - zl.mean())) / (th.mean() - tl.mean());
    base.level = target.low - zl.mean() - base.drift * tl.mean();
}

// Log-depth is linear but the target is on the level of depth, so the drift
// solves a one-dimensional ratio condition and the level follows in closed form.
void calibrate_log_linear(OutcomeBase& base, const std::vector<double>& z, const std::vector<double>& tau,
                          const std::vector<bool>& high, RegimeTarget target) {
    const double noise_factor = std::exp(0.5 * base.noise_sd * base.noise_sd);
    auto means = [&](double drift) {
        CellAccumulator lo, hi;
        for (std::size_t i = 0; i < z.size(); ++i) (high[i] ? hi : lo).add(std::exp(z[i] + drift * tau[i]));
        return std::pair{lo, hi};
    };
    auto [lo0, hi0] = means(0.0);
    if (lo0.n == 0) return;
    if (hi0.n > 0 && target.low > 0.0 && target.high > 0.0) {
        const double want = std::log(target.high / target.low);
        auto gap = [&](double d) {
            auto [l, h] = means(d);
            return std::log(h.mean() / l.mean()) - want;
        };
        double a = -20.0, b = 20.0;
        double fa = gap(a), fb = gap(b);
        if (fa * fb < 0.0) {
            for (int it = 0; it < 200 && b - a > 1e-13; ++it) {
                const double mid = 0.5 * (a + b);
                const double fm = gap(mid);
                if ((fm < 0.0) == (fa < 0.0)) {
                    a = mid;
                    fa = fm;
                } else {
                    b = mid;
                }
            }
            base.drift = 0.5 * (a + b);
        }
    }
    auto [lo, hi] = means(base.drift);
    base.level = std::log(target.low / (lo.mean() * noise_factor));
}

void calibrate_archetypes(std::array<ArchetypeCostModel, kArchetypeCount>& models,
                          const std::vector<double>& eff, const std::vector<double>& share,
                          const std::vector<bool>& shock, const std::vector<bool>& high,
                          const std::array<WelfareCells, kArchetypeCount>& targets) {
    // cells: 0 calm/low, 1 calm/high, 2 shock/low, 3 shock/high
    std::array<CellAccumulator, 4> e, s;
    for (std::size_t i = 0; i < eff.size(); ++i) {
        const std::size_t c = (shock[i] ? 2 : 0) + (high[i] ? 1 : 0);
        e[c].add(eff[i]);
        s[c].add(share[i]);
    }
    for (const auto& c : e)
        if (c.n == 0) return;
    if (std::abs(s[1].mean() - s[0].mean()) < 1e-9 || std::abs(s[3].mean() - s[2].mean()) < 1e-9) return;

    for (std::size_t a = 0; a < kArchetypeCount; ++a) {
        const auto& T = targets[a];
        auto& m = models[a];
        m.share_loading = ((T[1] - e[1].mean()) - (T[0] - e[0].mean())) / (s[1].mean() - s[0].mean());
        m.base = T[0] - e[0].mean() - m.share_loading * s[0].mean();
        const double shock_slope =
            ((T[3] - e[3].mean()) - (T[2] - e[2].mean())) / (s[3].mean() - s[2].mean());
        m.shock_share_loading = shock_slope - m.share_loading;
        m.shock_premium = T[2] - e[2].mean() - m.base - shock_slope * s[2].mean();
    }
}

}  // namespace

std::vector<MarketSpec> draw_markets(const SimConfig& cfg) {
    const auto m = static_cast<std::size_t>(cfg.n_markets);
    std::vector<MarketSpec> markets(m);
    const auto schedules = assign_treatments(cfg);
    parallel_for(m, cfg.threads, [&](std::size_t i) {
        auto& spec = markets[i];
        spec.market_id = static_cast<int>(i);
        auto rng = market_stream(cfg.seed, i, kAttributeStream);
        spec.attrs = draw_attributes(cfg, rng);
        spec.schedule = schedules[i];
    });
    assign_families(cfg, markets);
    parallel_for(m, cfg.threads, [&](std::size_t i) {
        auto& spec = markets[i];
        if (spec.family_id) return;
        auto rng = market_stream(cfg.seed, i, kOutcomeStream);
        spec.outcome = draw_outcome(spec.attrs, rng);
    });
    return markets;
}

SimulationResult simulate(const SimConfig& cfg) {
    cfg.validate();
    using O = LinearOutcome;
    const auto M = static_cast<std::size_t>(cfg.n_markets);
    const auto T = static_cast<std::size_t>(cfg.n_periods);

    SimulationResult result;
    auto& panel = result.panel;
    auto& design = result.design;
    panel.n_markets = cfg.n_markets;
    panel.n_periods = cfg.n_periods;
    panel.seed = cfg.seed;
    panel.markets = draw_markets(cfg);

    design.attribute_medians = attribute_medians(panel.markets);
    auto& rd = design.row_design;
    rd.n_periods = cfg.n_periods;
    rd.bases = cfg.bases;
    rd.effects = cfg.effects;
    rd.archetype_models = cfg.archetype_models;
    rd.share = {cfg.share_baseline, cfg.share_cap, cfg.share_weights};
    rd.api_active_threshold = cfg.api_active_threshold;
    rd.realized_horizon = cfg.realized_horizon;

    design.contexts.resize(M);
    for (std::size_t i = 0; i < M; ++i) {
        auto& ctx = design.contexts[i];
        ctx.spec = panel.markets[i];
        // Market effects come after the attribute draws on the same stream.
        auto rng = market_stream(cfg.seed, i, kAttributeStream);
        (void)draw_attributes(cfg, rng);
        for (std::size_t o = 0; o < kLinearOutcomeCount; ++o) ctx.market_effect[o] = cfg.bases[o].market_sd * std_normal(rng);
        if (cfg.effects.heterogeneity) {
            ctx.spread_multiplier = heterogeneity_multiplier(cfg.effects.spread_subgroups,
                                                             cfg.effects[O::QuotedSpread].main.mm,
                                                             ctx.spec.attrs, design.attribute_medians);
            ctx.impact_multiplier = heterogeneity_multiplier(cfg.effects.impact_subgroups,
                                                             cfg.effects[O::PriceImpact].main.mm,
                                                             ctx.spec.attrs, design.attribute_medians);
        }
    }

    const ObservationNoise obs = observation_noise(cfg);
    std::vector<MarketPath> paths(M);
    parallel_for(M, cfg.threads, [&](std::size_t i) { paths[i] = simulate_path(cfg, panel.markets[i], obs); });

    const std::size_t N = M * T;
    std::size_t shocks = 0;
    for (const auto& p : paths)
        for (const auto& s : p.states) shocks += s.shock;
    design.shock_share = static_cast<double>(shocks) / static_cast<double>(N);

    if (cfg.calibration.enabled) {
        // Noise-free linear predictors with zero level and drift.
        RowDesign zero = rd;
        for (auto& b : zero.bases) {
            b.level = 0.0;
            b.drift = 0.0;
        }
        std::array<std::vector<double>, kLinearOutcomeCount> z;
        for (auto& v : z) v.resize(N);
        std::vector<double> tau(N), share(N);
        std::vector<bool> high(N), shock(N);
        for (std::size_t i = 0; i < M; ++i) {
            const auto& ctx = design.contexts[i];
            const auto& sched = ctx.spec.schedule;
            for (std::size_t t = 0; t < T; ++t) {
                const std::size_t k = i * T + t;
                const int ti = static_cast<int>(t);
                const bool mm = sched.mm_active(ti), lip = sched.lip_active(ti);
                const double api = sched.api_intensity(ti);
                const bool sh = paths[i].states[t].shock;
                for (std::size_t o = 0; o < kLinearOutcomeCount; ++o)
                    z[o][k] = linear_predictor(zero, ctx, static_cast<O>(o), ti, mm, lip, api, sh);
                tau[k] = static_cast<double>(t) / (static_cast<double>(T) - 1.0) - 0.5;
                share[k] = professional_share(rd.share, mm, lip, api);
                shock[k] = sh;
                const int channels = int(mm) + int(lip) + int(api >= cfg.api_active_threshold);
                high[k] = channels >= 2;
            }
        }
        const auto& tg = cfg.calibration;
        auto base = [&](O o) -> OutcomeBase& { return rd.bases[static_cast<std::size_t>(o)]; };
        calibrate_linear(base(O::QuotedSpread), z[0], tau, high, tg.quoted_spread);
        calibrate_linear(base(O::EffectiveSpread), z[1], tau, high, tg.effective_spread);
        calibrate_log_linear(base(O::LogDepth), z[3], tau, high, tg.depth);
        calibrate_linear(base(O::PriceImpact), z[4], tau, high, tg.price_impact);
        calibrate_linear(base(O::NoarbGap), z[5], tau, high, tg.noarb_gap);

        std::vector<double> eff(N);
        const auto& eb = base(O::EffectiveSpread);
        for (std::size_t k = 0; k < N; ++k) eff[k] = z[1][k] + eb.level + eb.drift * tau[k];
        calibrate_archetypes(rd.archetype_models, eff, share, shock, high, tg.archetype_cells);
    }

    panel.rows.resize(N);
    parallel_for(M, cfg.threads, [&](std::size_t i) {
        for (std::size_t t = 0; t < T; ++t)
            panel.rows[i * T + t] = gen_row(design.contexts[i], paths[i].states[t], paths[i].noise[t], rd);
    });
    return result;
}

Panel simulate_panel(const SimConfig& cfg) { return simulate(cfg).panel; }

}  // namespace pmlab::sim
