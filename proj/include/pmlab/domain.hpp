#pragma once

// Panel schema shared by the simulator, the estimators and the report
// pipeline. Everything here is a plain value type.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace pmlab {

/// Thrown when input data breaks a schema invariant (bad CSV, invalid ranges).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Smallest quoted-spread increment, in cents.
inline constexpr double kTickCents = 0.1;
inline constexpr double kProbFloor = 0.01;
inline constexpr double kProbCeil = 0.99;
inline constexpr double kDefaultApiActiveThreshold = 0.5;

enum class Category { Politics, Macro, Sports, Crypto };

std::string_view to_string(Category c);
Category parse_category(std::string_view s);

struct MarketAttributes {
    Category category = Category::Politics;
    double info_density = 0.5;
    double hedgeability = 0.5;
    double resolution_clarity = 0.5;  // 1 = clear, 0 = ambiguous
    double baseline_vol = 0.1;        // per-period log-odds diffusion scale
    double anchor_logodds = 0.0;      // long-run level of the belief process
    double mean_reversion = 0.1;      // pull toward the anchor, in (0,1)
    double jump_intensity = 0.05;     // per-period news-shock probability
};

/// Empty when every field is inside its documented range.
std::vector<std::string> attribute_violations(const MarketAttributes& a);

struct TreatmentSchedule {
    std::optional<int> mm_activation;
    std::optional<int> lip_activation;
    std::optional<int> api_adoption;
    int api_ramp_length = 20;

    bool mm_active(int t) const { return mm_activation && t >= *mm_activation; }
    bool lip_active(int t) const { return lip_activation && t >= *lip_activation; }
    /// Linear ramp from 0 at adoption to 1 after api_ramp_length periods.
    double api_intensity(int t) const;
    bool never_treated() const { return !mm_activation && !lip_activation && !api_adoption; }
};

struct MarketSpec {
    int market_id = 0;
    MarketAttributes attrs;
    TreatmentSchedule schedule;
    int outcome = 0;  // resolution Y_m
    std::optional<int> family_id;
};

enum class Archetype : std::size_t {
    SmallSlowTaker = 0,
    SmallFastTaker = 1,
    LargeHedgedTrader = 2,
    InformedLikeTrader = 3,
};
inline constexpr std::size_t kArchetypeCount = 4;
inline constexpr std::array<Archetype, kArchetypeCount> kAllArchetypes{
    Archetype::SmallSlowTaker, Archetype::SmallFastTaker, Archetype::LargeHedgedTrader,
    Archetype::InformedLikeTrader};

std::string_view to_string(Archetype a);
/// Short column-friendly key: slow, fast, hedged, informed.
std::string_view archetype_key(Archetype a);

struct TraderArchetype {
    Archetype kind;
    int latency_periods;
    double size_multiplier;
    double information_edge;
};

/// Latency ordering: slow > fast >= hedged >= informed.
std::array<TraderArchetype, kArchetypeCount> default_archetypes();

struct PanelRow {
    int market_id = 0;
    int t = 0;
    double latent_logodds = 0.0;
    double true_prob = 0.5;
    double observed_prob = 0.5;
    bool shock = false;
    bool mm_active = false;
    bool lip_active = false;
    double api_intensity = 0.0;
    double professional_share = 0.0;
    double quoted_spread = 1.0;     // cents
    double effective_spread = 1.0;  // cents
    double realized_spread = 0.0;   // cents
    double adverse_selection = 1.0; // cents
    double depth = 1.0;             // contracts
    double price_impact = 0.0;      // basis points
    double yes_price = 0.5;
    double no_price = 0.5;
    std::optional<int> family_id;
    std::array<double, kArchetypeCount> archetype_costs{};  // cents
};

struct Panel {
    std::vector<PanelRow> rows;  // (market, t) order
    std::vector<MarketSpec> markets;
    int n_markets = 0;
    int n_periods = 0;
    std::uint64_t seed = 0;

    const PanelRow& at(int market, int t) const {
        return rows[static_cast<std::size_t>(market) * static_cast<std::size_t>(n_periods) +
                    static_cast<std::size_t>(t)];
    }
    int outcome(int market) const { return markets[static_cast<std::size_t>(market)].outcome; }
};

enum class Regime { LowBundle, HighBundle };
std::string_view to_string(Regime r);

/// Number of active channels; the API channel counts once its intensity
/// reaches api_threshold.
int active_channel_count(const PanelRow& row, double api_threshold = kDefaultApiActiveThreshold);

/// HighBundle iff at least two channels are active.
Regime classify_regime(const PanelRow& row, double api_threshold = kDefaultApiActiveThreshold);

struct Violation {
    int market_id = -1;  // -1 for panel-level violations
    int t = -1;
    std::string what;
};

std::string to_string(const Violation& v);

/// Violations are data: the report is empty iff the panel is well formed.
std::vector<Violation> validate_panel(const Panel& panel);

double logistic(double x);
double logit(double p);

}  // namespace pmlab
