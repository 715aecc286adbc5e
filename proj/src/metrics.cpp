#include "pmlab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pmlab::metrics {

double effective_spread(const TradeObs& obs) {
    return kCentsPerUnit * 2.0 * obs.sign * (obs.exec_price - obs.midpoint);
}

double realized_spread(const TradeObs& obs) {
    return kCentsPerUnit * 2.0 * obs.sign * (obs.exec_price - obs.future_midpoint);
}

double adverse_selection(double effective_cents, double realized_cents) {
    return effective_cents - realized_cents;
}

double price_impact(double mid_now, double mid_future, int sign) {
    if (!(mid_now > 0.0 && mid_now < 1.0)) throw MetricError("price_impact: midpoint outside (0,1)");
    return 10000.0 * sign * (mid_future - mid_now) / mid_now;
}

double brier(double p, int y) {
    const double d = p - static_cast<double>(y);
    return d * d;
}

CalibrationReport ece(std::span<const Forecast> forecasts, int n_bins) {
    if (forecasts.empty()) throw MetricError("ece: empty forecast set");
    if (n_bins < 2) throw MetricError("ece: need at least 2 bins");

    const auto nb = static_cast<std::size_t>(n_bins);
    std::vector<double> sum_p(nb, 0.0), sum_y(nb, 0.0);
    std::vector<std::size_t> count(nb, 0);
    double brier_sum = 0.0;
    for (const auto& f : forecasts) {
        const double p = std::clamp(f.p, 0.0, 1.0);
        // p == 1 belongs to the last bin.
        auto b = static_cast<std::size_t>(p * n_bins);
        if (b >= nb) b = nb - 1;
        sum_p[b] += p;
        sum_y[b] += f.y;
        ++count[b];
        brier_sum += brier(p, f.y);
    }

    CalibrationReport rep;
    rep.n = forecasts.size();
    rep.bin_edges.resize(nb + 1);
    for (std::size_t i = 0; i <= nb; ++i) rep.bin_edges[i] = static_cast<double>(i) / n_bins;
    rep.bins.resize(nb);
    const double n = static_cast<double>(rep.n);
    for (std::size_t b = 0; b < nb; ++b) {
        auto& bin = rep.bins[b];
        bin.lo = rep.bin_edges[b];
        bin.hi = rep.bin_edges[b + 1];
        bin.count = count[b];
        if (count[b] == 0) continue;
        const double c = static_cast<double>(count[b]);
        bin.mean_forecast = sum_p[b] / c;
        bin.frequency = sum_y[b] / c;
        rep.ece += (c / n) * std::abs(bin.mean_forecast - bin.frequency);
    }
    rep.mean_brier = brier_sum / n;
    return rep;
}

double complementary_gap(double yes_price, double no_price) {
    return std::abs(yes_price + no_price - 1.0);
}

double simplex_gap(std::span<const double> family_prices) {
    if (family_prices.size() < 2) throw MetricError("simplex_gap: need at least 2 contracts");
    // Summing in sorted order makes the result exactly order-independent.
    std::vector<double> sorted(family_prices.begin(), family_prices.end());
    std::sort(sorted.begin(), sorted.end());
    return std::abs(std::accumulate(sorted.begin(), sorted.end(), 0.0) - 1.0);
}

double semantic_dispersion(std::span<const double> matched_prices) {
    if (matched_prices.size() < 2) throw MetricError("semantic_dispersion: need at least 2 prices");
    const auto [lo, hi] = std::minmax_element(matched_prices.begin(), matched_prices.end());
    return *hi - *lo;
}

}  // namespace pmlab::metrics
