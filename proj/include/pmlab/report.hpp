#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pmlab/config.hpp"
#include "pmlab/econometrics.hpp"
#include "pmlab/welfare.hpp"

namespace pmlab::report {

inline constexpr const char* kToolVersion = "0.1.0";

struct Artifact {
    std::string name;  // file name relative to the output directory
    std::string bytes;
};

/// Channel coefficients of one outcome; absent when the channel never varies.
struct CoefRow {
    std::string outcome;
    std::vector<std::string> columns;
    std::vector<std::optional<double>> coef;
    std::vector<std::optional<double>> se;
    std::size_t n = 0;
    std::size_t clusters = 0;
};

struct SubgroupRow {
    econ::Subgroup subgroup;
    std::optional<double> spread, spread_se;
    std::optional<double> impact, impact_se;
};

struct ReportData {
    econ::RegimeSummary regimes;
    std::vector<CoefRow> modular;  // channel effects
    std::vector<CoefRow> shock;    // shock-state interactions
    std::vector<SubgroupRow> subgroups;
    welfare::ArchetypeCostTable costs;
    std::vector<welfare::PassThroughResult> pass_through;
    std::optional<welfare::WelfareReport> welfare;
    std::vector<econ::EventStudySeries> events;
    std::optional<econ::PostAverage> event_post;
    std::vector<std::string> notes;  // sections left empty and why
};

/// Outcomes of the modular and shock-interaction tables, in table order.
const std::vector<std::string>& modular_outcomes();
const std::vector<std::string>& shock_outcomes();
const std::vector<std::string>& event_outcomes();

ReportData analyze(const Panel& panel, const ReportOptions& opts);

/// Every table, text rendering and figure, in a fixed order.
std::vector<Artifact> render(const ReportData& data, const ReportOptions& opts);

struct StageTiming {
    std::string stage;
    double seconds = 0.0;
};

/// manifest.json: config snapshot, seed, version and a sha256 per artifact.
/// Timings are included only when given, so default manifests stay byte-stable.
/// `inputs` lists files read rather than written (path, sha256).
std::string manifest_json(const RunConfig& cfg, const std::vector<Artifact>& artifacts,
                          const std::vector<std::pair<std::string, std::string>>& inputs = {},
                          const std::vector<StageTiming>& timings = {});

}  // namespace pmlab::report
