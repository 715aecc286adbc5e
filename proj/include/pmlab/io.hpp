#pragma once

#include <filesystem>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pmlab/domain.hpp"

namespace pmlab::io {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr int kCsvDecimals = 6;

/// Fixed-point rendering independent of locale.
std::string fixed(double v, int decimals = kCsvDecimals);

/// Reads a whole file; throws IoError.
std::string read_file(const std::filesystem::path& path);
/// Writes bytes, creating parent directories; throws IoError.
void write_file(const std::filesystem::path& path, std::string_view bytes);

std::string sha256_hex(std::string_view bytes);

/// Simple CSV builder; cells are written verbatim (no quoting needed for our data).
class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header);
    void row(std::vector<std::string> cells);
    const std::string& str() const { return out_; }

private:
    std::size_t width_;
    std::string out_;
};

std::vector<std::string> split_csv_line(std::string_view line);

/// panel.csv: one row per (market, period) in panel order.
std::string panel_csv(const Panel& panel);
/// markets.csv: attributes, schedules and resolutions.
std::string markets_csv(const Panel& panel);

/// Parses markets.csv; throws DataError on malformed content.
std::vector<MarketSpec> parse_markets_csv(std::string_view text);
/// Parses panel.csv against the market list; throws DataError on malformed
/// content or a non-rectangular layout.
Panel parse_panel_csv(std::string_view text, std::vector<MarketSpec> markets);

/// Loads panel.csv and the markets.csv next to it.
Panel load_panel(const std::filesystem::path& panel_csv_path);

}  // namespace pmlab::io
