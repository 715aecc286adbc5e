#pragma once

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pmlab/domain.hpp"
#include "pmlab/metrics.hpp"
#include "pmlab/simulator.hpp"

namespace pmlab::econ {

class EstimationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct DesignMatrix {
    Eigen::VectorXd y;
    Eigen::MatrixXd x;
    std::vector<std::string> names;
    std::vector<int> cluster;  // market id per row
    std::vector<int> time;     // period per row

    Eigen::Index rows() const { return y.size(); }
    Eigen::Index cols() const { return x.cols(); }
    /// Throws EstimationError on shape mismatches, duplicate names or non-finite values.
    void check() const;
};

struct DemeanOptions {
    double tolerance = 1e-10;  // max-abs change of a sweep
    int max_iterations = 10000;
};

/// Two-way demeaning of y and every column of x by alternating market and
/// time projections. Works on unbalanced subsamples.
DesignMatrix within_transform(const DesignMatrix& dm, const DemeanOptions& opts = {});

struct OlsFit {
    Eigen::VectorXd beta;
    Eigen::VectorXd residuals;
};

/// Least squares by column-pivoting QR. Throws EstimationError naming the
/// columns that are collinear with the rest.
OlsFit ols(const DesignMatrix& dm);

/// Liang-Zeger sandwich clustered on DesignMatrix::cluster with small-sample
/// factor G/(G-1) * (N-1)/(N-K).
Eigen::MatrixXd cluster_robust_vcov(const DesignMatrix& dm, const Eigen::VectorXd& residuals);
Eigen::VectorXd cluster_robust_se(const DesignMatrix& dm, const Eigen::VectorXd& residuals);

/// Two-sided normal thresholds 1.645 / 1.96 / 2.576.
std::string_view significance_stars(double t_stat);

struct RegressionResult {
    std::vector<std::string> names;
    Eigen::VectorXd coef;
    Eigen::VectorXd se;
    Eigen::VectorXd t_stat;
    std::vector<std::string> stars;
    std::size_t n = 0;
    std::size_t k = 0;
    std::size_t clusters = 0;
    Eigen::VectorXd residuals;

    bool has(std::string_view name) const;
    double coef_of(std::string_view name) const;
    double se_of(std::string_view name) const;
    double t_of(std::string_view name) const;
};

/// within_transform -> ols -> cluster_robust_se.
RegressionResult fit_twfe(const DesignMatrix& dm, const DemeanOptions& opts = {});

// --- panel-facing estimators -------------------------------------------------------

struct EstimationOptions {
    double api_threshold = kDefaultApiActiveThreshold;
    int local_vol_window = 10;
    std::vector<std::string> controls{"shock", "local_vol"};
};

/// Row selection over Panel::rows; empty means every row.
using RowMask = std::vector<bool>;

/// Outcome columns: quoted_spread, effective_spread, realized_spread,
/// adverse_selection, depth, log_depth, price_impact, brier, noarb_gap,
/// professional_share, cost_slow, cost_fast, cost_hedged, cost_informed.
std::vector<double> outcome_column(const Panel& panel, std::string_view name);

/// Regressor columns: mm, lip, api, shock, local_vol, high_bundle,
/// <channel>_x_shock, high_bundle_x_shock, mm_x_high_<attribute> (above-median band indicator).
std::vector<double> regressor_column(const Panel& panel, std::string_view name,
                                     const EstimationOptions& opts = {});

/// Trailing standard deviation of observed_prob changes over `window` periods.
std::vector<double> local_volatility(const Panel& panel, int window);

DesignMatrix build_design(const Panel& panel, std::string_view outcome,
                          const std::vector<std::string>& regressors, const RowMask& mask = {},
                          const EstimationOptions& opts = {});

RegressionResult twfe_estimate(const Panel& panel, std::string_view outcome,
                               const std::vector<std::string>& channels = {"mm", "lip", "api"},
                               const EstimationOptions& opts = {}, const RowMask& mask = {});

/// Channel main effects plus shock and channel x shock interactions.
RegressionResult interaction_estimate(const Panel& panel, std::string_view outcome,
                                      const EstimationOptions& opts = {});

struct Subgroup {
    sim::Attribute attribute;
    bool high;  // above-median band (clear resolution for resolution_clarity)
};

std::string_view subgroup_label(const Subgroup& s);
std::vector<Subgroup> all_subgroups();
std::array<double, sim::kAttributeCount> panel_attribute_medians(const Panel& panel);
RowMask subgroup_mask(const Panel& panel, const Subgroup& s);

/// TWFE on the subgroup's markets. Throws if the subgroup lacks treated or
/// untreated market-maker rows.
RegressionResult subgroup_estimate(const Panel& panel, std::string_view outcome, const Subgroup& s,
                                   const EstimationOptions& opts = {});

struct RegimeStats {
    std::size_t rows = 0;
    double quoted_spread = 0.0;
    double effective_spread = 0.0;
    double depth = 0.0;
    double price_impact = 0.0;
    double brier = 0.0;
    double noarb_gap = 0.0;
    double ece = 0.0;
    metrics::CalibrationReport calibration;
};

struct RegimeSummary {
    std::optional<RegimeStats> low;
    std::optional<RegimeStats> high;
    /// Percent change low -> high, present when both regimes are.
    std::optional<double> pct_change(double RegimeStats::*field) const;
};

RegimeSummary summarize_by_regime(const Panel& panel, int n_bins = metrics::kDefaultEceBins,
                                  double api_threshold = kDefaultApiActiveThreshold);

struct EventPoint {
    int k = 0;
    double treated_change = 0.0;  // mean change of treated markets relative to k = -1
    double control_change = 0.0;  // matched change of not-yet-treated controls
    double diff = 0.0;
    double se = 0.0;
    std::size_t n_treated = 0;
    bool missing = false;
};

struct EventStudySeries {
    std::string outcome;
    std::vector<EventPoint> points;
    const EventPoint* at(int k) const;
};

/// Market-maker activation event study against not-yet-treated controls.
/// Each treated market contributes its change from k = -1 minus the change
/// of the controls still untreated at the later of the two calendar dates.
EventStudySeries event_study(const Panel& panel, std::string_view outcome, int k_pre = 6, int k_post = 12);

struct PostAverage {
    double mean = 0.0;
    double se = 0.0;
    std::size_t markets = 0;
};

/// Average post-period (k >= 0) difference, per-market averaged, market-level SE.
PostAverage event_study_post_average(const Panel& panel, std::string_view outcome, int k_post = 12);

}  // namespace pmlab::econ
