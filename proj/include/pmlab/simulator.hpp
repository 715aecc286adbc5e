#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "pmlab/domain.hpp"
#include "pmlab/metrics.hpp"

namespace pmlab::sim {

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg, std::string key = {})
        : std::runtime_error(msg), key_(std::move(key)) {}
    const std::string& key() const { return key_; }

private:
    std::string key_;
};

struct ChannelEffects {
    double mm = 0.0;
    double lip = 0.0;
    double api = 0.0;
};

struct LinearEffects {
    ChannelEffects main;
    double shock = 0.0;
    ChannelEffects shock_interaction;
};

enum class Attribute : std::size_t { InfoDensity = 0, Hedgeability, ResolutionClarity, BaselineVol };
inline constexpr std::size_t kAttributeCount = 4;
std::string_view to_string(Attribute a);
/// Band labels as printed in the heterogeneity table, e.g. {"High info density", "Low info density"}.
std::array<std::string_view, 2> band_labels(Attribute a);
double attribute_value(const MarketAttributes& attrs, Attribute a);

/// Market-maker coefficient per median-split band: [attribute][0 = above median, 1 = below].
/// Resolution clarity above the median is the "clear" band.
using SubgroupCoefficients = std::array<std::array<double, 2>, kAttributeCount>;

/// The linear outcomes generated directly by the simulator.
enum class LinearOutcome : std::size_t {
    QuotedSpread = 0,
    EffectiveSpread,
    AdverseSelection,
    LogDepth,
    PriceImpact,
    NoarbGap,
};
inline constexpr std::size_t kLinearOutcomeCount = 6;
std::string_view to_string(LinearOutcome o);

struct DesignedEffects {
    std::array<LinearEffects, kLinearOutcomeCount> outcome{};
    /// Channel shifts of the observation-noise variance; at the population
    /// level this is the expected change in the Brier score.
    ChannelEffects brier_shift;
    bool heterogeneity = true;
    SubgroupCoefficients spread_subgroups{};
    SubgroupCoefficients impact_subgroups{};

    LinearEffects& operator[](LinearOutcome o) { return outcome[static_cast<std::size_t>(o)]; }
    const LinearEffects& operator[](LinearOutcome o) const {
        return outcome[static_cast<std::size_t>(o)];
    }

    /// Defaults reproducing the modular, shock and subgroup coefficient tables.
    static DesignedEffects defaults();
    /// Every channel, shock and interaction effect set to zero.
    static DesignedEffects zero();
};

/// Additive market and time structure of one linear outcome (before treatment effects).
struct OutcomeBase {
    double level = 0.0;
    double market_sd = 0.0;
    double seasonal_amp = 0.0;
    double drift = 0.0;  // slope of a linear trend over the sample, centred at mid-sample
    double noise_sd = 0.0;
};

/// Execution-cost model of one archetype:
/// cost = effective spread + base + share_loading * share + shock * (shock_premium + shock_share_loading * share).
struct ArchetypeCostModel {
    double base = 0.0;
    double share_loading = 0.0;
    double shock_premium = 0.0;
    double shock_share_loading = 0.0;
};

struct RegimeTarget {
    double low = 0.0;
    double high = 0.0;
};

/// Cell order: calm/low, calm/high, shock/low, shock/high.
using WelfareCells = std::array<double, 4>;

struct CalibrationTargets {
    bool enabled = true;
    RegimeTarget quoted_spread{6.928, 5.950};
    RegimeTarget effective_spread{6.877, 5.550};
    RegimeTarget depth{156.4, 206.4};
    RegimeTarget price_impact{13.122, 11.957};
    RegimeTarget noarb_gap{0.024, 0.019};
    std::array<WelfareCells, kArchetypeCount> archetype_cells{{
        {6.921, 6.584, 11.164, 11.472},
        {6.821, 5.962, 10.858, 10.612},
        {6.268, 4.909, 10.288, 9.351},
        {6.659, 5.118, 10.361, 8.944},
    }};
};

struct SimConfig {
    int n_markets = 320;
    int n_periods = 180;
    std::optional<long long> panel_size;  // declared rows; must equal n_markets * n_periods
    std::uint64_t seed = 42;
    int threads = 0;  // 0 = hardware concurrency

    // Treatment assignment.
    double never_treated_share = 0.2;
    int activation_lo = 20;
    int activation_hi = 150;
    double mm_probability = 0.75;
    double lip_probability = 0.6;
    double api_probability = 0.6;
    int api_ramp_length = 20;
    int realized_horizon = metrics::kDefaultHorizon;  // periods between trade and mark-out midpoint
    double api_active_threshold = kDefaultApiActiveThreshold;

    // Belief process and attributes.
    double anchor_sd = 0.75;
    double mean_reversion_lo = 0.08;
    double mean_reversion_hi = 0.25;
    double baseline_vol_lo = 0.08;
    double baseline_vol_hi = 0.20;
    double jump_intensity_lo = 0.03;
    double jump_intensity_hi = 0.09;
    double jump_size_scale = 0.35;

    // Observation noise: sd of the probability noise at api = 0 and clear resolution.
    double ece_target_noise = 0.05;
    double ambiguity_noise_weight = 1.0;

    // Mediator.
    double share_baseline = 0.1;
    double share_cap = 0.9;
    ChannelEffects share_weights{1.2, 0.8, 1.0};

    // Event families (simplex contracts).
    double family_fraction = 0.15;
    int family_size = 3;

    DesignedEffects effects = DesignedEffects::defaults();
    std::array<OutcomeBase, kLinearOutcomeCount> bases{};
    double archetype_noise_sd = 0.4;
    std::array<ArchetypeCostModel, kArchetypeCount> archetype_models{};
    CalibrationTargets calibration;

    SimConfig();

    OutcomeBase& base(LinearOutcome o) { return bases[static_cast<std::size_t>(o)]; }
    const OutcomeBase& base(LinearOutcome o) const { return bases[static_cast<std::size_t>(o)]; }

    /// Throws ConfigError naming the offending key.
    void validate() const;

    /// Turns off all residual noise (outcome and archetype noise).
    void zero_residual_noise();
};

/// Parameters of the probability-observation noise.
struct ObservationNoise {
    double base_sd = 0.05;
    double ambiguity_weight = 1.0;
    ChannelEffects variance_shift{-0.0004, -0.0006, -0.0012};
};

ObservationNoise observation_noise(const SimConfig& cfg);

// --- single-step building blocks ------------------------------------------------

/// One step of the mean-reverting log-odds belief process; jump is 0 when no shock fires.
double step_belief(double x, const MarketAttributes& attrs, double jump, double noise_draw);

/// Bernoulli(logistic(anchor_logodds)).
int draw_outcome(const MarketAttributes& attrs, std::mt19937_64& rng);

/// Noise sd as a function of automation and ambiguity (and, through the
/// variance shifts, of maker coverage and incentives).
double observation_noise_sd(const ObservationNoise& p, double api_intensity, double resolution_clarity,
                            bool mm_active = false, bool lip_active = false);

/// logistic(x) + sd * noise_draw, clipped into [0.01, 0.99].
double observe_probability(double x, double api_intensity, double resolution_clarity,
                           double noise_draw, const ObservationNoise& p = {},
                           bool mm_active = false, bool lip_active = false);

struct ShareParams {
    double baseline = 0.1;
    double cap = 0.9;
    ChannelEffects weights{1.2, 0.8, 1.0};
};

double professional_share(const ShareParams& p, bool mm_active, bool lip_active, double api_intensity);
double professional_share_path(const ShareParams& p, const TreatmentSchedule& schedule, int t);

/// Stratified assignment: exactly round(never_treated_share * n_markets)
/// markets receive no channel.
std::vector<TreatmentSchedule> assign_treatments(const SimConfig& cfg);

/// Per-market additive structure used by gen_row.
struct MarketContext {
    MarketSpec spec;
    std::array<double, kLinearOutcomeCount> market_effect{};
    double spread_multiplier = 1.0;  // heterogeneity scaling of the market-maker effect
    double impact_multiplier = 1.0;
};

/// Global (non-market) structure used by gen_row.
struct RowDesign {
    int n_periods = 180;
    std::array<OutcomeBase, kLinearOutcomeCount> bases{};
    DesignedEffects effects;
    std::array<ArchetypeCostModel, kArchetypeCount> archetype_models{};
    ShareParams share;
    double api_active_threshold = kDefaultApiActiveThreshold;
    int realized_horizon = metrics::kDefaultHorizon;

    /// level + seasonal + drift terms for outcome o at period t.
    double time_base(LinearOutcome o, int t) const;
};

struct PeriodState {
    int t = 0;
    double latent = 0.0;
    bool shock = false;
    double observed_prob = 0.5;
};

struct RowNoise {
    std::array<double, kLinearOutcomeCount> outcome{};  // already scaled by noise_sd
    std::array<double, kArchetypeCount> archetype{};
};

/// Share of the default-horizon adverse selection that has accrued after
/// `horizon` periods in a market whose beliefs revert at rate kappa.
double horizon_factor(double kappa, int horizon);

/// Builds one panel row from the linear outcome structure.
PanelRow gen_row(const MarketContext& market, const PeriodState& state, const RowNoise& noise,
                 const RowDesign& design);

/// Linear predictor of outcome o at a row, excluding market/time bases and noise.
double treatment_component(const DesignedEffects& effects, LinearOutcome o, const MarketContext& market,
                           bool mm, bool lip, double api, bool shock);

/// What the generator actually used after calibration; needed to state the
/// ground truth of a run.
struct SimulationDesign {
    RowDesign row_design;
    std::vector<MarketContext> contexts;
    std::array<double, kAttributeCount> attribute_medians{};
    double shock_share = 0.0;
};

struct SimulationResult {
    Panel panel;
    SimulationDesign design;
};

SimulationResult simulate(const SimConfig& cfg);
Panel simulate_panel(const SimConfig& cfg);

/// Attributes and resolutions only (no paths), for calibration checks over many markets.
std::vector<MarketSpec> draw_markets(const SimConfig& cfg);

/// Independent stream for (seed, market, purpose).
std::mt19937_64 market_stream(std::uint64_t seed, std::uint64_t market, std::uint64_t purpose);

}  // namespace pmlab::sim
