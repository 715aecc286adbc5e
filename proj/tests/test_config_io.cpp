#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "pmlab/config.hpp"
#include "pmlab/io.hpp"
#include "support.hpp"

using namespace pmlab;

TEST_CASE("config parsing") {
    const auto cfg = parse_config_string(
        "# comment\n"
        "n_markets = 50\n"
        "n_periods=40   # trailing comment\n"
        "activation_hi = 30\n"
        "seed = 7\n"
        "delta_method = interaction\n"
        "effect_quoted_spread_mm = -0.5\n"
        "ece_bins = 15\n");
    CHECK(cfg.sim.n_markets == 50);
    CHECK(cfg.sim.n_periods == 40);
    CHECK(cfg.sim.seed == 7);
    CHECK(cfg.report.delta_method == welfare::DeltaMethod::Interaction);
    CHECK(cfg.sim.effects[sim::LinearOutcome::QuotedSpread].main.mm == -0.5);
    CHECK(cfg.report.ece_bins == 15);
}

TEST_CASE("unknown and malformed keys name the key") {
    auto key_of = [](const std::string& text) {
        try {
            parse_config_string(text);
        } catch (const sim::ConfigError& e) {
            return e.key();
        }
        return std::string("<none>");
    };
    CHECK(key_of("n_marketz = 10\n") == "n_marketz");
    CHECK(key_of("n_markets = ten\n") == "n_markets");
    CHECK(key_of("mm_probability = 1.5\n") == "mm_probability");
    CHECK(key_of("panel_size = 1000\n") == "panel_size");
    CHECK(key_of("ece_bins = 1\n") == "ece_bins");
    CHECK(key_of("just a line\n") != "<none>");
}

TEST_CASE("config dump round trips") {
    RunConfig cfg;
    set_config_value(cfg, "baseline_vol_hi", "0.3");
    set_config_value(cfg, "target_cost_slow_shock_high", "11.5");
    set_config_value(cfg, "event_k_post", "9");
    const auto text = dump_config(cfg);
    const auto back = parse_config_string(text);
    CHECK(dump_config(back) == text);
    CHECK(back.sim.baseline_vol_hi == 0.3);
    CHECK(back.report.event_k_post == 9);
    CHECK(config_entries(back).size() == config_entries(RunConfig{}).size());
}

TEST_CASE("fixed formatting is locale free and drops negative zero") {
    CHECK(io::fixed(1.5) == "1.500000");
    CHECK(io::fixed(-0.0) == "0.000000");
    CHECK(io::fixed(-1e-9) == "0.000000");
    CHECK(io::fixed(-2.25, 2) == "-2.25");
}

TEST_CASE("sha256 of a known string") {
    CHECK(io::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("panel CSV round trips byte for byte") {
    const auto panel = sim::simulate_panel(testing::small_config());
    const auto csv = io::panel_csv(panel);
    const auto mk = io::markets_csv(panel);
    const auto back = io::parse_panel_csv(csv, io::parse_markets_csv(mk));
    CHECK(io::panel_csv(back) == csv);
    CHECK(io::markets_csv(back) == mk);
    CHECK(validate_panel(back).empty());
    CHECK(back.rows.size() == panel.rows.size());
}

TEST_CASE("malformed panel CSV is a data error") {
    const auto panel = sim::simulate_panel(testing::small_config(4, 10));
    const auto markets = io::parse_markets_csv(io::markets_csv(panel));
    auto csv = io::panel_csv(panel);
    CHECK_THROWS_AS(io::parse_panel_csv("market_id,t\n1,2\n", markets), DataError);

    std::string truncated = csv.substr(0, csv.rfind('\n', csv.size() - 2) + 1);
    CHECK_THROWS_AS(io::parse_panel_csv(truncated, markets), DataError);

    const auto pos = csv.find('\n') + 1;
    std::string garbled = csv;
    garbled.replace(pos, 1, "x");
    CHECK_THROWS_AS(io::parse_panel_csv(garbled, markets), DataError);
}

TEST_CASE("file helpers") {
    const auto dir = std::filesystem::temp_directory_path() / "pmlab_io_test";
    std::filesystem::remove_all(dir);
    io::write_file(dir / "nested" / "a.txt", "hello");
    CHECK(io::read_file(dir / "nested" / "a.txt") == "hello");
    CHECK_THROWS_AS(io::read_file(dir / "missing.txt"), io::IoError);
    std::filesystem::remove_all(dir);
}
