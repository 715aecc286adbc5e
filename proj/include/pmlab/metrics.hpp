#pragma once

// Market-quality measurements. All prices are in probability units unless
// the name says otherwise; spreads come back in cents (x100).

#include <cstddef>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace pmlab::metrics {

inline constexpr double kCentsPerUnit = 100.0;
inline constexpr int kDefaultEceBins = 10;
inline constexpr int kDefaultHorizon = 5;

class MetricError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct TradeObs {
    double exec_price;       // P_j
    double midpoint;         // M_j
    double future_midpoint;  // M_{j+horizon}
    int sign;                // +1 buy, -1 sell
    int horizon = kDefaultHorizon;
};

double effective_spread(const TradeObs& obs);
double realized_spread(const TradeObs& obs);
double adverse_selection(double effective_cents, double realized_cents);

/// Signed midpoint return after the trade, in basis points of the current midpoint.
double price_impact(double mid_now, double mid_future, int sign);

double brier(double p, int y);

struct Forecast {
    double p;
    int y;
};

struct CalibrationBin {
    double lo = 0.0;
    double hi = 0.0;
    double mean_forecast = 0.0;
    double frequency = 0.0;
    std::size_t count = 0;
};

struct CalibrationReport {
    std::vector<double> bin_edges;
    std::vector<CalibrationBin> bins;  // one per bin, empty bins have count 0
    double ece = 0.0;
    double mean_brier = 0.0;
    std::size_t n = 0;
};

/// Equal-width bins on [0,1]; the gap in each non-empty bin is weighted by
/// its share of the sample. Throws MetricError on empty input or n_bins < 2.
CalibrationReport ece(std::span<const Forecast> forecasts, int n_bins = kDefaultEceBins);

double complementary_gap(double yes_price, double no_price);
double simplex_gap(std::span<const double> family_prices);
double semantic_dispersion(std::span<const double> matched_prices);

}  // namespace pmlab::metrics
