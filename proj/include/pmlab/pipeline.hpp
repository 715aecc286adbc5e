#pragma once

#include <filesystem>
#include <vector>

#include "pmlab/config.hpp"
#include "pmlab/report.hpp"

namespace pmlab::pipeline {

/// panel.csv and markets.csv for the configured run.
std::vector<report::Artifact> simulate_artifacts(const RunConfig& cfg);

/// Parses the panel back from its CSV artifacts, exactly as `report` would read them.
Panel panel_from_artifacts(const std::vector<report::Artifact>& sim_artifacts);

/// Throws DataError describing the first violation, if any.
void require_valid(const Panel& panel);

/// Tables, text renderings and figures for a panel.
std::vector<report::Artifact> report_artifacts(const Panel& panel, const RunConfig& cfg);

/// simulate followed by report, without touching the disk.
std::vector<report::Artifact> full_artifacts(const RunConfig& cfg);

/// Writes each artifact under `dir`; throws io::IoError.
void write_artifacts(const std::filesystem::path& dir, const std::vector<report::Artifact>& artifacts);

}  // namespace pmlab::pipeline
