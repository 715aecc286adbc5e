#include <doctest.h>

#include <json.hpp>

#include <regex>
#include <string>
#include <vector>

#include "pmlab/io.hpp"
#include "pmlab/pipeline.hpp"
#include "support.hpp"

using namespace pmlab;

namespace {

RunConfig small_run(std::uint64_t seed = 11) {
    RunConfig cfg;
    cfg.sim = testing::small_config(60, 40, seed);
    cfg.report.event_k_pre = 3;
    cfg.report.event_k_post = 4;
    return cfg;
}

const std::string& bytes_of(const std::vector<report::Artifact>& arts, const std::string& name) {
    for (const auto& a : arts)
        if (a.name == name) return a.bytes;
    throw std::runtime_error("missing artifact " + name);
}

// Tag balance check: every element opened is closed in order.
bool well_formed_xml(const std::string& s) {
    std::vector<std::string> stack;
    static const std::regex tag(R"(<(/?)([A-Za-z][\w:-]*)[^>]*?(/?)>)");
    int roots = 0;
    for (std::sregex_iterator it(s.begin(), s.end(), tag), end; it != end; ++it) {
        const auto& m = *it;
        if (m[0].str().rfind("<?", 0) == 0) continue;
        if (m[1].length() > 0) {
            if (stack.empty() || stack.back() != m[2].str()) return false;
            stack.pop_back();
        } else if (m[3].length() == 0) {
            if (stack.empty()) ++roots;
            stack.push_back(m[2].str());
        }
    }
    return stack.empty() && roots == 1;
}

}  // namespace

TEST_CASE("full run emits every table and figure") {
    const auto cfg = small_run();
    const auto arts = pipeline::full_artifacts(cfg);
    for (const char* name : {"panel.csv", "markets.csv", "table2_summary.csv", "table3_modular.csv", "table4_shock.csv",
                             "table5_welfare.csv", "table6_heterogeneity.csv", "fig_event_spread_depth.svg",
                             "fig_event_impact_brier.svg", "fig_calibration.svg", "fig_heterogeneity.svg",
                             "fig_welfare.svg"})
        CHECK_NOTHROW(bytes_of(arts, name));
    for (const auto& a : arts) {
        if (a.name.size() < 4 || a.name.substr(a.name.size() - 4) != ".svg") continue;
        CAPTURE(a.name);
        CHECK(a.bytes.find("<svg") != std::string::npos);
        CHECK(well_formed_xml(a.bytes));
    }

    const auto manifest = nlohmann::json::parse(report::manifest_json(cfg, arts));
    CHECK(manifest["artifacts"].size() >= 12);
    CHECK(manifest["seed"] == cfg.sim.seed);
    for (const auto& entry : manifest["artifacts"])
        CHECK(entry["sha256"] == io::sha256_hex(bytes_of(arts, entry["path"].get<std::string>())));
}

TEST_CASE("different seeds give different panels") {
    const auto a = pipeline::simulate_artifacts(small_run(7));
    const auto b = pipeline::simulate_artifacts(small_run(8));
    CHECK(io::sha256_hex(bytes_of(a, "panel.csv")) != io::sha256_hex(bytes_of(b, "panel.csv")));
}

TEST_CASE("output bytes do not depend on the thread count") {
    auto cfg = small_run();
    cfg.sim.threads = 1;
    const auto one = pipeline::full_artifacts(cfg);
    cfg.sim.threads = 3;
    const auto three = pipeline::full_artifacts(cfg);
    REQUIRE(one.size() == three.size());
    for (std::size_t i = 0; i < one.size(); ++i) {
        CAPTURE(one[i].name);
        CHECK(one[i].bytes == three[i].bytes);
    }
}

TEST_CASE("untreated panel reports absent high-bundle cells") {
    auto cfg = small_run();
    cfg.sim.never_treated_share = 1.0;
    cfg.sim.calibration.enabled = false;
    const auto arts = pipeline::full_artifacts(cfg);
    const auto& t2 = bytes_of(arts, "table2_summary.csv");
    CHECK(t2.find("low_bundle") != std::string::npos);
    CHECK(t2.find("high_bundle,,,,,,,,0") != std::string::npos);
    CHECK(!bytes_of(arts, "tables.txt").empty());
}

TEST_CASE("invalid panel is rejected with the first violation") {
    const auto cfg = small_run();
    auto panel = pipeline::panel_from_artifacts(pipeline::simulate_artifacts(cfg));
    panel.rows[3].realized_spread += 1.0;
    try {
        pipeline::require_valid(panel);
        FAIL("expected a data error");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("adverse_selection") != std::string::npos);
    }
}
