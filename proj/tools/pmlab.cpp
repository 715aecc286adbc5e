// Command-line driver: simulate a panel, report on a panel, or both.

#include <CLI11.hpp>

#include <chrono>
#include <cstdint>
#include <iostream>
#include <optional>

#include "pmlab/config.hpp"
#include "pmlab/io.hpp"
#include "pmlab/pipeline.hpp"
#include "pmlab/report.hpp"

namespace {

enum Exit { kOk = 0, kConfig = 2, kIo = 3, kData = 4 };

struct Flags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::optional<int> delta;
    std::optional<int> bins;
    std::optional<int> threads;
    std::string panel;
    bool timings = false;
};

void add_common(CLI::App* cmd, Flags& f) {
    cmd->add_option("--config", f.config, "flat key = value configuration file");
    cmd->add_option("--seed", f.seed, "random seed (overrides the config)");
    cmd->add_option("--out", f.out, "output directory")->required();
    cmd->add_option("--delta", f.delta, "realized-spread horizon in periods");
    cmd->add_option("--bins", f.bins, "number of calibration bins");
    cmd->add_option("--threads", f.threads, "worker threads for simulation (0 = all cores)");
    cmd->add_flag("--timings", f.timings, "record wall-clock per stage in the manifest");
}

pmlab::RunConfig load(const Flags& f) {
    pmlab::RunConfig cfg;
    if (!f.config.empty()) cfg = pmlab::parse_config_string(pmlab::io::read_file(f.config));
    if (f.seed) cfg.sim.seed = *f.seed;
    if (f.delta) cfg.sim.realized_horizon = *f.delta;
    if (f.bins) cfg.report.ece_bins = *f.bins;
    if (f.threads) cfg.sim.threads = *f.threads;
    cfg.validate();
    return cfg;
}

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int run(const std::string& cmd, const Flags& f) {
    namespace pl = pmlab::pipeline;
    const auto cfg = load(f);
    std::vector<pmlab::report::Artifact> arts;
    std::vector<std::pair<std::string, std::string>> inputs;
    std::vector<pmlab::report::StageTiming> timings;

    if (cmd == "simulate" || cmd == "full") {
        auto t0 = Clock::now();
        arts = pl::simulate_artifacts(cfg);
        timings.push_back({"simulate", since(t0)});
    }
    if (cmd == "report" || cmd == "full") {
        auto t0 = Clock::now();
        pmlab::Panel panel;
        if (cmd == "report") {
            const std::filesystem::path path = f.panel.empty() ? std::filesystem::path(f.out) / "panel.csv" : std::filesystem::path(f.panel);
            panel = pmlab::io::load_panel(path);
            inputs.emplace_back(path.string(), pmlab::io::sha256_hex(pmlab::io::read_file(path)));
            const auto markets = path.parent_path() / "markets.csv";
            inputs.emplace_back(markets.string(), pmlab::io::sha256_hex(pmlab::io::read_file(markets)));
        } else {
            panel = pl::panel_from_artifacts(arts);
        }
        pl::require_valid(panel);
        timings.push_back({"load", since(t0)});
        t0 = Clock::now();
        for (auto& a : pl::report_artifacts(panel, cfg)) arts.push_back(std::move(a));
        timings.push_back({"report", since(t0)});
    }

    pl::write_artifacts(f.out, arts);
    const auto manifest = pmlab::report::manifest_json(cfg, arts, inputs, f.timings ? timings : decltype(timings){});
    pmlab::io::write_file(std::filesystem::path(f.out) / "manifest.json", manifest);
    std::cout << cmd << ": wrote " << arts.size() + 1 << " files to " << f.out << "\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Synthetic prediction-market microstructure lab"};
    app.require_subcommand(1);
    Flags f;
    auto* simulate = app.add_subcommand("simulate", "simulate a panel: panel.csv, markets.csv, manifest.json");
    auto* report = app.add_subcommand("report", "tables and figures from an existing panel");
    auto* full = app.add_subcommand("full", "simulate, then report");
    add_common(simulate, f);
    add_common(report, f);
    add_common(full, f);
    report->add_option("panel", f.panel, "panel.csv to read (default: <out>/panel.csv; markets.csv is read from the same directory)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kConfig;
    }
    const std::string cmd = app.get_subcommands().front()->get_name();

    try {
        return run(cmd, f);
    } catch (const pmlab::sim::ConfigError& e) {
        std::cerr << "config error";
        if (!e.key().empty()) std::cerr << " [" << e.key() << "]";
        std::cerr << ": " << e.what() << "\n";
        return kConfig;
    } catch (const pmlab::io::IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kIo;
    } catch (const pmlab::DataError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kData;
    } catch (const std::exception& e) {
        std::cerr << "analysis error: " << e.what() << "\n";
        return kData;
    }
}
