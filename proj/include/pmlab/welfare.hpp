#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pmlab/domain.hpp"
#include "pmlab/econometrics.hpp"

namespace pmlab::welfare {

class WelfareError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Denominator guard for pass-through, in cents.
inline constexpr double kQuotedEpsilon = 1e-9;

enum class ShockState { Calm = 0, Shock };
std::string_view to_string(ShockState s);

/// Cell order used throughout: calm/low, calm/high, shock/low, shock/high.
inline constexpr std::size_t kCellCount = 4;
std::size_t cell_index(ShockState s, Regime r);
std::string cell_label(std::size_t cell);

struct WelfareCell {
    Archetype archetype{};
    ShockState shock_state{};
    Regime regime{};
    double mean_cost = 0.0;
    std::size_t count = 0;
};

struct ArchetypeCostTable {
    std::array<std::array<std::optional<WelfareCell>, kCellCount>, kArchetypeCount> cells{};
    const std::optional<WelfareCell>& at(Archetype a, ShockState s, Regime r) const;
};

ArchetypeCostTable archetype_cost_table(const Panel& panel, double api_threshold = kDefaultApiActiveThreshold);

/// (-delta_eff) / (-delta_quoted). Throws WelfareError when |delta_quoted| < kQuotedEpsilon.
double pass_through(double delta_eff, double delta_quoted);

double shock_wedge(double pt_shock, double pt_calm);

enum class DeltaMethod {
    Subsample,    // separate regime regressions on calm and shock rows
    Interaction,  // one regression with high_bundle x shock
};

struct GroupDeltas {
    Archetype group{};
    std::array<double, 2> delta_eff{};     // [calm, shock]
    std::array<double, 2> delta_quoted{};  // [calm, shock]
};

/// Regime effect on the group's execution cost and on the quoted spread, by shock state.
GroupDeltas estimate_group_deltas(const Panel& panel, Archetype group, DeltaMethod method = DeltaMethod::Subsample,
                                  const econ::EstimationOptions& opts = {});

struct PassThroughResult {
    Archetype group{};
    double delta_eff = 0.0;     // pooled over shock states
    double delta_quoted = 0.0;  // pooled over shock states
    std::optional<double> pt;
    GroupDeltas by_state;
    std::array<std::optional<double>, 2> pt_state{};  // [calm, shock]
    std::optional<double> sw;
};

std::vector<PassThroughResult> pass_through_table(const Panel& panel, DeltaMethod method = DeltaMethod::Subsample,
                                                  const econ::EstimationOptions& opts = {});

enum class Identification { Public, NotIdentified };
std::string_view to_string(Identification id);

struct WelfareComponent {
    std::string name;
    double value = 0.0;  // cents per trade; positive is a gain to the named party
    double se = 0.0;
    Identification identification{};
    std::string source;
};

struct WelfareReport {
    std::vector<WelfareComponent> components;  // takers, makers, informed, risk sharing
    double total() const;
};

/// Regime (high vs low bundle) change in the four welfare components.
WelfareReport welfare_decomposition(const Panel& panel, const econ::EstimationOptions& opts = {});

}  // namespace pmlab::welfare
