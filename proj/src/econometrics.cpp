#include "pmlab/econometrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace pmlab::econ {

void DesignMatrix::check() const {
    const auto n = y.size();
    if (x.rows() != n || static_cast<Eigen::Index>(cluster.size()) != n ||
        static_cast<Eigen::Index>(time.size()) != n)
        throw EstimationError("design matrix: inconsistent row counts");
    if (static_cast<Eigen::Index>(names.size()) != x.cols())
        throw EstimationError("design matrix: column names do not match columns");
    std::set<std::string> seen;
    for (const auto& nm : names)
        if (!seen.insert(nm).second) throw EstimationError("design matrix: duplicate column '" + nm + "'");
    if (!y.allFinite() || !x.allFinite()) throw EstimationError("design matrix: missing or non-finite values");
}

namespace {

// Dense 0..G-1 relabelling of a group vector.
std::vector<int> compact(const std::vector<int>& g, int& n_groups) {
    std::map<int, int> index;
    for (int v : g) index.emplace(v, 0);
    int next = 0;
    for (auto& [k, v] : index) v = next++;
    n_groups = next;
    std::vector<int> out(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) out[i] = index[g[i]];
    return out;
}

// Subtracts group means; returns the largest mean removed.
double sweep(Eigen::Ref<Eigen::VectorXd> v, const std::vector<int>& g, const std::vector<double>& counts) {
    std::vector<double> sums(counts.size(), 0.0);
    for (Eigen::Index i = 0; i < v.size(); ++i) sums[static_cast<std::size_t>(g[static_cast<std::size_t>(i)])] += v[i];
    double worst = 0.0;
    for (std::size_t k = 0; k < sums.size(); ++k) {
        sums[k] /= counts[k];
        worst = std::max(worst, std::abs(sums[k]));
    }
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] -= sums[static_cast<std::size_t>(g[static_cast<std::size_t>(i)])];
    return worst;
}

void demean_column(Eigen::Ref<Eigen::VectorXd> v, const std::vector<int>& gm, const std::vector<double>& cm,
                   const std::vector<int>& gt, const std::vector<double>& ct, const DemeanOptions& opts,
                   const std::string& name) {
    for (int it = 0; it < opts.max_iterations; ++it) {
        const double a = sweep(v, gm, cm);
        const double b = sweep(v, gt, ct);
        if (std::max(a, b) < opts.tolerance) return;
    }
    throw EstimationError("within transform did not converge for column '" + name + "'");
}

}  // namespace

DesignMatrix within_transform(const DesignMatrix& dm, const DemeanOptions& opts) {
    dm.check();
    int n_m = 0, n_t = 0;
    const auto gm = compact(dm.cluster, n_m);
    const auto gt = compact(dm.time, n_t);
    std::vector<double> cm(static_cast<std::size_t>(n_m), 0.0), ct(static_cast<std::size_t>(n_t), 0.0);
    for (auto g : gm) cm[static_cast<std::size_t>(g)] += 1.0;
    for (auto g : gt) ct[static_cast<std::size_t>(g)] += 1.0;

    DesignMatrix out = dm;
    demean_column(out.y, gm, cm, gt, ct, opts, "outcome");
    for (Eigen::Index j = 0; j < out.x.cols(); ++j)
        demean_column(out.x.col(j), gm, cm, gt, ct, opts, out.names[static_cast<std::size_t>(j)]);
    return out;
}

OlsFit ols(const DesignMatrix& dm) {
    dm.check();
    const auto n = dm.rows();
    const auto k = dm.cols();
    if (k == 0) throw EstimationError("ols: no regressors");
    if (n <= k) throw EstimationError("ols: need more observations than regressors");

    // Scale columns so the rank threshold is unit-free.
    Eigen::VectorXd scale(k);
    for (Eigen::Index j = 0; j < k; ++j) {
        const double nrm = dm.x.col(j).norm();
        scale[j] = nrm > 0.0 ? nrm : 1.0;
    }
    const Eigen::MatrixXd xs = dm.x * scale.cwiseInverse().asDiagonal();
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xs);
    qr.setThreshold(1e-10);
    if (qr.rank() < k) {
        std::ostringstream os;
        os << "ols: rank deficient design (rank " << qr.rank() << " of " << k << "); collinear columns:";
        const auto& perm = qr.colsPermutation().indices();
        for (Eigen::Index j = qr.rank(); j < k; ++j) os << " " << dm.names[static_cast<std::size_t>(perm[j])];
        throw EstimationError(os.str());
    }
    OlsFit fit;
    fit.beta = qr.solve(dm.y).cwiseQuotient(scale);
    fit.residuals = dm.y - dm.x * fit.beta;
    return fit;
}

Eigen::MatrixXd cluster_robust_vcov(const DesignMatrix& dm, const Eigen::VectorXd& residuals) {
    const auto n = dm.rows();
    const auto k = dm.cols();
    int g_count = 0;
    const auto g = compact(dm.cluster, g_count);
    if (g_count < 2) throw EstimationError("cluster-robust variance needs at least 2 clusters");
    if (n <= k) throw EstimationError("cluster-robust variance needs N > K");

    const Eigen::MatrixXd xtx = dm.x.transpose() * dm.x;
    const Eigen::MatrixXd bread = xtx.ldlt().solve(Eigen::MatrixXd::Identity(k, k));

    Eigen::MatrixXd scores = Eigen::MatrixXd::Zero(g_count, k);
    for (Eigen::Index i = 0; i < n; ++i) scores.row(g[static_cast<std::size_t>(i)]) += residuals[i] * dm.x.row(i);
    const Eigen::MatrixXd meat = scores.transpose() * scores;

    const double G = g_count;
    const double factor = G / (G - 1.0) * (static_cast<double>(n) - 1.0) / static_cast<double>(n - k);
    return factor * bread * meat * bread;
}

Eigen::VectorXd cluster_robust_se(const DesignMatrix& dm, const Eigen::VectorXd& residuals) {
    return cluster_robust_vcov(dm, residuals).diagonal().cwiseMax(0.0).cwiseSqrt();
}

std::string_view significance_stars(double t_stat) {
    const double a = std::abs(t_stat);
    if (a >= 2.576) return "***";
    if (a >= 1.96) return "**";
    if (a >= 1.645) return "*";
    return "";
}

namespace {
Eigen::Index index_of(const std::vector<std::string>& names, std::string_view name) {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return static_cast<Eigen::Index>(i);
    throw EstimationError("no coefficient named '" + std::string(name) + "'");
}
}  // namespace

bool RegressionResult::has(std::string_view name) const {
    return std::find(names.begin(), names.end(), name) != names.end();
}
double RegressionResult::coef_of(std::string_view name) const { return coef[index_of(names, name)]; }
double RegressionResult::se_of(std::string_view name) const { return se[index_of(names, name)]; }
double RegressionResult::t_of(std::string_view name) const { return t_stat[index_of(names, name)]; }

RegressionResult fit_twfe(const DesignMatrix& dm, const DemeanOptions& opts) {
    const DesignMatrix w = within_transform(dm, opts);
    const OlsFit fit = ols(w);
    RegressionResult r;
    r.names = w.names;
    r.coef = fit.beta;
    r.se = cluster_robust_se(w, fit.residuals);
    r.t_stat = r.coef.cwiseQuotient(r.se);
    for (Eigen::Index j = 0; j < r.coef.size(); ++j) r.stars.emplace_back(significance_stars(r.t_stat[j]));
    r.n = static_cast<std::size_t>(w.rows());
    r.k = static_cast<std::size_t>(w.cols());
    int g = 0;
    (void)compact(w.cluster, g);
    r.clusters = static_cast<std::size_t>(g);
    r.residuals = fit.residuals;
    return r;
}

// --- panel columns ---------------------------------------------------------------

std::vector<double> outcome_column(const Panel& panel, std::string_view name) {
    std::vector<double> v(panel.rows.size());
    auto fill = [&](auto&& f) {
        for (std::size_t i = 0; i < panel.rows.size(); ++i) v[i] = f(panel.rows[i]);
    };
    if (name == "quoted_spread") fill([](const PanelRow& r) { return r.quoted_spread; });
    else if (name == "effective_spread") fill([](const PanelRow& r) { return r.effective_spread; });
    else if (name == "realized_spread") fill([](const PanelRow& r) { return r.realized_spread; });
    else if (name == "adverse_selection") fill([](const PanelRow& r) { return r.adverse_selection; });
    else if (name == "depth") fill([](const PanelRow& r) { return r.depth; });
    else if (name == "log_depth") fill([](const PanelRow& r) { return std::log(r.depth); });
    else if (name == "price_impact") fill([](const PanelRow& r) { return r.price_impact; });
    else if (name == "professional_share") fill([](const PanelRow& r) { return r.professional_share; });
    else if (name == "noarb_gap")
        fill([](const PanelRow& r) { return metrics::complementary_gap(r.yes_price, r.no_price); });
    else if (name == "brier")
        fill([&](const PanelRow& r) { return metrics::brier(r.observed_prob, panel.outcome(r.market_id)); });
    else {
        for (auto a : kAllArchetypes) {
            if (name == "cost_" + std::string(archetype_key(a))) {
                const auto k = static_cast<std::size_t>(a);
                fill([k](const PanelRow& r) { return r.archetype_costs[k]; });
                return v;
            }
        }
        throw EstimationError("unknown outcome '" + std::string(name) + "'");
    }
    return v;
}

std::vector<double> local_volatility(const Panel& panel, int window) {
    std::vector<double> out(panel.rows.size(), 0.0);
    const auto T = static_cast<std::size_t>(panel.n_periods);
    if (T == 0) return out;
    for (std::size_t m = 0; m < static_cast<std::size_t>(panel.n_markets); ++m) {
        for (std::size_t t = 0; t < T; ++t) {
            // Changes ending at s in (t - window, t], s >= 1.
            const std::size_t lo = t + 1 >= static_cast<std::size_t>(window) ? t + 1 - static_cast<std::size_t>(window) : 0;
            double sum = 0.0, sq = 0.0;
            int n = 0;
            for (std::size_t s = std::max<std::size_t>(lo, 1); s <= t; ++s) {
                const double d = panel.rows[m * T + s].observed_prob - panel.rows[m * T + s - 1].observed_prob;
                sum += d;
                sq += d * d;
                ++n;
            }
            if (n >= 2) {
                const double mean = sum / n;
                out[m * T + t] = std::sqrt(std::max(0.0, sq / n - mean * mean));
            }
        }
    }
    return out;
}

std::array<double, sim::kAttributeCount> panel_attribute_medians(const Panel& panel) {
    std::array<double, sim::kAttributeCount> med{};
    for (std::size_t a = 0; a < sim::kAttributeCount; ++a) {
        std::vector<double> v;
        for (const auto& m : panel.markets) v.push_back(sim::attribute_value(m.attrs, static_cast<sim::Attribute>(a)));
        std::sort(v.begin(), v.end());
        const auto n = v.size();
        if (n == 0) continue;
        med[a] = n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    }
    return med;
}

std::vector<double> regressor_column(const Panel& panel, std::string_view name, const EstimationOptions& opts) {
    std::vector<double> v(panel.rows.size());
    auto fill = [&](auto&& f) {
        for (std::size_t i = 0; i < panel.rows.size(); ++i) v[i] = f(panel.rows[i]);
    };
    auto channel = [&](std::string_view ch) -> std::function<double(const PanelRow&)> {
        if (ch == "mm") return [](const PanelRow& r) { return r.mm_active ? 1.0 : 0.0; };
        if (ch == "lip") return [](const PanelRow& r) { return r.lip_active ? 1.0 : 0.0; };
        if (ch == "api") return [](const PanelRow& r) { return r.api_intensity; };
        if (ch == "high_bundle") {
            const double thr = opts.api_threshold;
            return [thr](const PanelRow& r) { return classify_regime(r, thr) == Regime::HighBundle ? 1.0 : 0.0; };
        }
        return {};
    };
    if (auto f = channel(name)) {
        fill(f);
    } else if (name == "shock") {
        fill([](const PanelRow& r) { return r.shock ? 1.0 : 0.0; });
    } else if (name == "local_vol") {
        v = local_volatility(panel, opts.local_vol_window);
    } else if (name.size() > 8 && name.substr(name.size() - 8) == "_x_shock") {
        auto f = channel(name.substr(0, name.size() - 8));
        if (!f) throw EstimationError("unknown regressor '" + std::string(name) + "'");
        fill([&](const PanelRow& r) { return r.shock ? f(r) : 0.0; });
    } else if (name.rfind("mm_x_high_", 0) == 0) {
        const auto attr = name.substr(10);
        const auto med = panel_attribute_medians(panel);
        for (std::size_t a = 0; a < sim::kAttributeCount; ++a) {
            if (attr == sim::to_string(static_cast<sim::Attribute>(a))) {
                fill([&](const PanelRow& r) {
                    const auto& attrs = panel.markets[static_cast<std::size_t>(r.market_id)].attrs;
                    const bool high = sim::attribute_value(attrs, static_cast<sim::Attribute>(a)) > med[a];
                    return (r.mm_active && high) ? 1.0 : 0.0;
                });
                return v;
            }
        }
        throw EstimationError("unknown regressor '" + std::string(name) + "'");
    } else {
        throw EstimationError("unknown regressor '" + std::string(name) + "'");
    }
    return v;
}

DesignMatrix build_design(const Panel& panel, std::string_view outcome, const std::vector<std::string>& regressors,
                          const RowMask& mask, const EstimationOptions& opts) {
    if (!mask.empty() && mask.size() != panel.rows.size()) throw EstimationError("row mask size mismatch");
    const auto y = outcome_column(panel, outcome);
    std::vector<std::vector<double>> cols;
    cols.reserve(regressors.size());
    for (const auto& r : regressors) cols.push_back(regressor_column(panel, r, opts));

    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < panel.rows.size(); ++i)
        if (mask.empty() || mask[i]) keep.push_back(i);
    if (keep.empty()) throw EstimationError("empty estimation sample");

    DesignMatrix dm;
    const auto n = static_cast<Eigen::Index>(keep.size());
    dm.y.resize(n);
    dm.x.resize(n, static_cast<Eigen::Index>(regressors.size()));
    dm.names = regressors;
    dm.cluster.resize(keep.size());
    dm.time.resize(keep.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto src = keep[static_cast<std::size_t>(i)];
        dm.y[i] = y[src];
        for (std::size_t j = 0; j < cols.size(); ++j) dm.x(i, static_cast<Eigen::Index>(j)) = cols[j][src];
        dm.cluster[static_cast<std::size_t>(i)] = panel.rows[src].market_id;
        dm.time[static_cast<std::size_t>(i)] = panel.rows[src].t;
    }
    return dm;
}

RegressionResult twfe_estimate(const Panel& panel, std::string_view outcome, const std::vector<std::string>& channels,
                               const EstimationOptions& opts, const RowMask& mask) {
    std::vector<std::string> regs = channels;
    for (const auto& c : opts.controls)
        if (std::find(regs.begin(), regs.end(), c) == regs.end()) regs.push_back(c);
    return fit_twfe(build_design(panel, outcome, regs, mask, opts));
}

RegressionResult interaction_estimate(const Panel& panel, std::string_view outcome, const EstimationOptions& opts) {
    std::vector<std::string> regs{"mm", "lip", "api", "shock", "mm_x_shock", "lip_x_shock", "api_x_shock"};
    for (const auto& c : opts.controls)
        if (std::find(regs.begin(), regs.end(), c) == regs.end()) regs.push_back(c);
    return fit_twfe(build_design(panel, outcome, regs, {}, opts));
}

std::string_view subgroup_label(const Subgroup& s) { return sim::band_labels(s.attribute)[s.high ? 0 : 1]; }

std::vector<Subgroup> all_subgroups() {
    std::vector<Subgroup> out;
    for (std::size_t a = 0; a < sim::kAttributeCount; ++a) {
        out.push_back({static_cast<sim::Attribute>(a), true});
        out.push_back({static_cast<sim::Attribute>(a), false});
    }
    return out;
}

RowMask subgroup_mask(const Panel& panel, const Subgroup& s) {
    const auto med = panel_attribute_medians(panel);
    const auto a = static_cast<std::size_t>(s.attribute);
    RowMask mask(panel.rows.size());
    for (std::size_t i = 0; i < panel.rows.size(); ++i) {
        const auto& attrs = panel.markets[static_cast<std::size_t>(panel.rows[i].market_id)].attrs;
        mask[i] = (sim::attribute_value(attrs, s.attribute) > med[a]) == s.high;
    }
    return mask;
}

RegressionResult subgroup_estimate(const Panel& panel, std::string_view outcome, const Subgroup& s,
                                   const EstimationOptions& opts) {
    const auto mask = subgroup_mask(panel, s);
    bool treated = false, untreated = false;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!mask[i]) continue;
        (panel.rows[i].mm_active ? treated : untreated) = true;
    }
    if (!treated || !untreated)
        throw EstimationError("subgroup '" + std::string(subgroup_label(s)) + "' has no variation in market-maker coverage");
    return twfe_estimate(panel, outcome, {"mm", "lip", "api"}, opts, mask);
}

std::optional<double> RegimeSummary::pct_change(double RegimeStats::*field) const {
    if (!low || !high || (*low).*field == 0.0) return std::nullopt;
    return 100.0 * ((*high).*field - (*low).*field) / (*low).*field;
}

RegimeSummary summarize_by_regime(const Panel& panel, int n_bins, double api_threshold) {
    struct Acc {
        std::size_t n = 0;
        double q = 0, e = 0, d = 0, i = 0, b = 0, g = 0;
        std::vector<metrics::Forecast> f;
    };
    std::array<Acc, 2> acc;
    for (const auto& r : panel.rows) {
        auto& a = acc[classify_regime(r, api_threshold) == Regime::HighBundle ? 1 : 0];
        const int y = panel.outcome(r.market_id);
        ++a.n;
        a.q += r.quoted_spread;
        a.e += r.effective_spread;
        a.d += r.depth;
        a.i += r.price_impact;
        a.b += metrics::brier(r.observed_prob, y);
        a.g += metrics::complementary_gap(r.yes_price, r.no_price);
        a.f.push_back({r.observed_prob, y});
    }
    auto finish = [&](const Acc& a) -> std::optional<RegimeStats> {
        if (a.n == 0) return std::nullopt;
        const double n = static_cast<double>(a.n);
        RegimeStats s;
        s.rows = a.n;
        s.quoted_spread = a.q / n;
        s.effective_spread = a.e / n;
        s.depth = a.d / n;
        s.price_impact = a.i / n;
        s.brier = a.b / n;
        s.noarb_gap = a.g / n;
        s.calibration = metrics::ece(a.f, n_bins);
        s.ece = s.calibration.ece;
        return s;
    };
    return {finish(acc[0]), finish(acc[1])};
}

const EventPoint* EventStudySeries::at(int k) const {
    for (const auto& p : points)
        if (p.k == k) return &p;
    return nullptr;
}

namespace {

struct EventData {
    int M = 0, T = 0;
    std::vector<double> y;           // M x T
    std::vector<int> activation;     // -1 = never
    double at(int m, int t) const { return y[static_cast<std::size_t>(m) * static_cast<std::size_t>(T) + static_cast<std::size_t>(t)]; }
};

EventData event_data(const Panel& panel, std::string_view outcome) {
    EventData d;
    d.M = panel.n_markets;
    d.T = panel.n_periods;
    d.y = outcome_column(panel, outcome);
    d.activation.resize(static_cast<std::size_t>(d.M), -1);
    for (int m = 0; m < d.M; ++m) {
        const auto& s = panel.markets[static_cast<std::size_t>(m)].schedule;
        if (s.mm_activation) d.activation[static_cast<std::size_t>(m)] = *s.mm_activation;
    }
    return d;
}

// Change of market m from period base to t, net of the matched control change.
std::optional<double> market_event_diff(const EventData& d, int m, int a, int k) {
    const int t = a + k, base = a - 1;
    if (t < 0 || t >= d.T || base < 0) return std::nullopt;
    const int cutoff = std::max(t, base);
    double sum = 0.0;
    int n = 0;
    for (int c = 0; c < d.M; ++c) {
        if (c == m) continue;
        const int act = d.activation[static_cast<std::size_t>(c)];
        if (act >= 0 && act <= cutoff) continue;
        sum += d.at(c, t) - d.at(c, base);
        ++n;
    }
    if (n == 0) return std::nullopt;
    return (d.at(m, t) - d.at(m, base)) - sum / n;
}

}  // namespace

EventStudySeries event_study(const Panel& panel, std::string_view outcome, int k_pre, int k_post) {
    const auto d = event_data(panel, outcome);
    EventStudySeries series;
    series.outcome = std::string(outcome);
    for (int k = -k_pre; k <= k_post; ++k) {
        EventPoint p;
        p.k = k;
        std::vector<double> diffs, treated, control;
        for (int m = 0; m < d.M; ++m) {
            const int a = d.activation[static_cast<std::size_t>(m)];
            if (a < 0) continue;
            auto diff = market_event_diff(d, m, a, k);
            if (!diff) continue;
            const double own = d.at(m, a + k) - d.at(m, a - 1);
            diffs.push_back(*diff);
            treated.push_back(own);
            control.push_back(own - *diff);
        }
        p.n_treated = diffs.size();
        if (diffs.size() < 2) {
            p.missing = true;
            series.points.push_back(p);
            continue;
        }
        const double n = static_cast<double>(diffs.size());
        auto mean = [n](const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / n; };
        p.diff = mean(diffs);
        p.treated_change = mean(treated);
        p.control_change = mean(control);
        double ss = 0.0;
        for (double v : diffs) ss += (v - p.diff) * (v - p.diff);
        p.se = std::sqrt(ss / (n - 1.0) / n);
        if (k == -1) {
            p.diff = p.treated_change = p.control_change = p.se = 0.0;
        }
        series.points.push_back(p);
    }
    return series;
}

PostAverage event_study_post_average(const Panel& panel, std::string_view outcome, int k_post) {
    const auto d = event_data(panel, outcome);
    std::vector<double> per_market;
    for (int m = 0; m < d.M; ++m) {
        const int a = d.activation[static_cast<std::size_t>(m)];
        if (a < 0) continue;
        double sum = 0.0;
        int n = 0;
        for (int k = 0; k <= k_post; ++k) {
            if (auto diff = market_event_diff(d, m, a, k)) {
                sum += *diff;
                ++n;
            }
        }
        if (n > 0) per_market.push_back(sum / n);
    }
    PostAverage out;
    out.markets = per_market.size();
    if (per_market.size() < 2) throw EstimationError("event study: fewer than 2 treated markets in the post window");
    const double n = static_cast<double>(per_market.size());
    out.mean = std::accumulate(per_market.begin(), per_market.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : per_market) ss += (v - out.mean) * (v - out.mean);
    out.se = std::sqrt(ss / (n - 1.0) / n);
    return out;
}

}  // namespace pmlab::econ
