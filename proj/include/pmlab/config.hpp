#pragma once

#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "pmlab/simulator.hpp"
#include "pmlab/welfare.hpp"

namespace pmlab {

/// Options of the estimation and reporting stage.
struct ReportOptions {
    int ece_bins = metrics::kDefaultEceBins;
    bool shock_control = true;  // shock indicator among the modular-regression controls
    int local_vol_window = 10;
    int event_k_pre = 6;
    int event_k_post = 12;
    welfare::DeltaMethod delta_method = welfare::DeltaMethod::Subsample;
    double api_active_threshold = kDefaultApiActiveThreshold;

    econ::EstimationOptions estimation() const;
};

struct RunConfig {
    sim::SimConfig sim;
    ReportOptions report;

    /// Throws sim::ConfigError naming the key.
    void validate() const;
};

/// Flat `key = value` lines; `#` starts a comment. Unknown keys and
/// malformed values throw sim::ConfigError carrying the key.
RunConfig parse_config(std::istream& in);
RunConfig parse_config_string(std::string_view text);

/// Sets one key on an existing configuration.
void set_config_value(RunConfig& cfg, std::string_view key, std::string_view value);

/// Every key with its current value, in a fixed order. Parsing the dump
/// reproduces the configuration.
std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& cfg);
std::string dump_config(const RunConfig& cfg);

}  // namespace pmlab
