#include "pmlab/pipeline.hpp"

#include "pmlab/io.hpp"

namespace pmlab::pipeline {

std::vector<report::Artifact> simulate_artifacts(const RunConfig& cfg) {
    const auto panel = sim::simulate_panel(cfg.sim);
    return {{"panel.csv", io::panel_csv(panel)}, {"markets.csv", io::markets_csv(panel)}};
}

Panel panel_from_artifacts(const std::vector<report::Artifact>& sim_artifacts) {
    const std::string* panel = nullptr;
    const std::string* markets = nullptr;
    for (const auto& a : sim_artifacts) {
        if (a.name == "panel.csv") panel = &a.bytes;
        if (a.name == "markets.csv") markets = &a.bytes;
    }
    if (!panel || !markets) throw DataError("simulation artifacts lack panel.csv or markets.csv");
    return io::parse_panel_csv(*panel, io::parse_markets_csv(*markets));
}

void require_valid(const Panel& panel) {
    const auto v = validate_panel(panel);
    if (!v.empty())
        throw DataError("invalid panel (" + std::to_string(v.size()) + " violations); first: " + to_string(v.front()));
}

std::vector<report::Artifact> report_artifacts(const Panel& panel, const RunConfig& cfg) {
    return report::render(report::analyze(panel, cfg.report), cfg.report);
}

std::vector<report::Artifact> full_artifacts(const RunConfig& cfg) {
    auto out = simulate_artifacts(cfg);
    const auto panel = panel_from_artifacts(out);
    require_valid(panel);
    for (auto& a : report_artifacts(panel, cfg)) out.push_back(std::move(a));
    return out;
}

void write_artifacts(const std::filesystem::path& dir, const std::vector<report::Artifact>& artifacts) {
    for (const auto& a : artifacts) io::write_file(dir / a.name, a.bytes);
}

}  // namespace pmlab::pipeline
