// Python bindings: measurement formulas, configuration, simulation and the
// estimators that operate on in-memory panels.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "pmlab/config.hpp"
#include "pmlab/io.hpp"
#include "pmlab/pipeline.hpp"
#include "pmlab/welfare.hpp"

namespace py = pybind11;
using namespace pmlab;

namespace {

RunConfig config_from(const std::string& text, std::optional<std::uint64_t> seed) {
    auto cfg = parse_config_string(text);
    if (seed) cfg.sim.seed = *seed;
    cfg.validate();
    return cfg;
}

py::dict regime_dict(const econ::RegimeStats& s) {
    py::dict d;
    d["rows"] = s.rows;
    d["quoted_spread"] = s.quoted_spread;
    d["effective_spread"] = s.effective_spread;
    d["depth"] = s.depth;
    d["price_impact"] = s.price_impact;
    d["brier"] = s.brier;
    d["noarb_gap"] = s.noarb_gap;
    d["ece"] = s.ece;
    return d;
}

py::dict result_dict(const econ::RegressionResult& r) {
    py::dict d;
    d["names"] = r.names;
    d["coef"] = r.coef;
    d["se"] = r.se;
    d["t"] = r.t_stat;
    d["n"] = r.n;
    d["clusters"] = r.clusters;
    return d;
}

// Panels cross the boundary as their CSV text, the same bytes the CLI writes.
Panel load(const std::string& panel_csv, const std::string& markets_csv) {
    return io::parse_panel_csv(panel_csv, io::parse_markets_csv(markets_csv));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Synthetic prediction-market microstructure lab";

    // Messages name the offending key or row.
    py::register_exception<sim::ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
    py::register_exception<io::IoError>(m, "IoError", PyExc_OSError);
    py::register_exception<econ::EstimationError>(m, "EstimationError", PyExc_RuntimeError);
    py::register_exception<welfare::WelfareError>(m, "WelfareError", PyExc_ArithmeticError);

    m.def("effective_spread", [](double p, double mid, int sign) { return metrics::effective_spread({p, mid, mid, sign}); },
          py::arg("exec_price"), py::arg("midpoint"), py::arg("sign"));
    m.def("realized_spread",
          [](double p, double mid_future, int sign) { return metrics::realized_spread({p, mid_future, mid_future, sign}); },
          py::arg("exec_price"), py::arg("future_midpoint"), py::arg("sign"));
    m.def("adverse_selection", &metrics::adverse_selection, py::arg("effective"), py::arg("realized"));
    m.def("price_impact", &metrics::price_impact, py::arg("mid_now"), py::arg("mid_future"), py::arg("sign"));
    m.def("brier", &metrics::brier, py::arg("p"), py::arg("y"));
    m.def("complementary_gap", &metrics::complementary_gap, py::arg("yes_price"), py::arg("no_price"));
    m.def("simplex_gap", [](std::vector<double> v) { return metrics::simplex_gap(v); }, py::arg("prices"));
    m.def("semantic_dispersion", [](std::vector<double> v) { return metrics::semantic_dispersion(v); }, py::arg("prices"));
    m.def(
        "ece",
        [](const std::vector<double>& p, const std::vector<int>& y, int n_bins) {
            if (p.size() != y.size()) throw py::value_error("p and y differ in length");
            std::vector<metrics::Forecast> f;
            for (std::size_t i = 0; i < p.size(); ++i) f.push_back({p[i], y[i]});
            return metrics::ece(f, n_bins).ece;
        },
        py::arg("p"), py::arg("y"), py::arg("n_bins") = metrics::kDefaultEceBins);
    m.def("pass_through", &welfare::pass_through, py::arg("delta_eff"), py::arg("delta_quoted"));
    m.def("shock_wedge", &welfare::shock_wedge, py::arg("pt_shock"), py::arg("pt_calm"));
    m.def(
        "classify_regime",
        [](bool mm, bool lip, double api, double threshold) {
            PanelRow r;
            r.mm_active = mm;
            r.lip_active = lip;
            r.api_intensity = api;
            return classify_regime(r, threshold) == Regime::HighBundle ? "high_bundle" : "low_bundle";
        },
        py::arg("mm"), py::arg("lip"), py::arg("api"), py::arg("threshold") = kDefaultApiActiveThreshold);

    m.def(
        "default_config", [] { return dump_config(RunConfig{}); }, "Every configuration key with its default value.");
    m.def(
        "check_config", [](const std::string& text) { return dump_config(config_from(text, std::nullopt)); },
        py::arg("text"), "Parses and validates a key = value configuration; returns its full dump.");

    m.def(
        "simulate",
        [](const std::string& config, std::optional<std::uint64_t> seed) {
            const auto arts = pipeline::simulate_artifacts(config_from(config, seed));
            return py::make_tuple(py::bytes(arts[0].bytes), py::bytes(arts[1].bytes));
        },
        py::arg("config") = "", py::arg("seed") = py::none(), "Returns (panel.csv, markets.csv) as bytes.");

    m.def(
        "full",
        [](const std::string& config, std::optional<std::uint64_t> seed) {
            const auto cfg = config_from(config, seed);
            const auto arts = pipeline::full_artifacts(cfg);
            py::dict out;
            for (const auto& a : arts) out[py::str(a.name)] = py::bytes(a.bytes);
            out["manifest.json"] = py::bytes(report::manifest_json(cfg, arts));
            return out;
        },
        py::arg("config") = "", py::arg("seed") = py::none(), "Every output file of a full run, by name.");

    m.def(
        "summarize",
        [](const std::string& panel_csv, const std::string& markets_csv, int n_bins) {
            const auto s = econ::summarize_by_regime(load(panel_csv, markets_csv), n_bins);
            py::dict d;
            d["low_bundle"] = s.low ? py::object(regime_dict(*s.low)) : py::object(py::none());
            d["high_bundle"] = s.high ? py::object(regime_dict(*s.high)) : py::object(py::none());
            return d;
        },
        py::arg("panel_csv"), py::arg("markets_csv"), py::arg("n_bins") = metrics::kDefaultEceBins);

    m.def(
        "twfe_panel",
        [](const std::string& panel_csv, const std::string& markets_csv, const std::string& outcome,
           const std::vector<std::string>& channels) {
            return result_dict(econ::twfe_estimate(load(panel_csv, markets_csv), outcome, channels));
        },
        py::arg("panel_csv"), py::arg("markets_csv"), py::arg("outcome"),
        py::arg("channels") = std::vector<std::string>{"mm", "lip", "api"});

    m.def(
        "twfe",
        [](const Eigen::VectorXd& y, const Eigen::MatrixXd& x, const std::vector<int>& cluster,
           const std::vector<int>& time, std::vector<std::string> names) {
            econ::DesignMatrix dm{y, x, std::move(names), cluster, time};
            if (dm.names.empty())
                for (Eigen::Index j = 0; j < x.cols(); ++j) dm.names.push_back("x" + std::to_string(j));
            return result_dict(econ::fit_twfe(dm));
        },
        py::arg("y"), py::arg("x"), py::arg("cluster"), py::arg("time"), py::arg("names") = std::vector<std::string>{},
        "Two-way fixed-effects regression with market-clustered standard errors.");

    m.attr("__version__") = report::kToolVersion;
}
