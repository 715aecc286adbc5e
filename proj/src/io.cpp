#include "pmlab/io.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace pmlab::io {

std::string fixed(double v, int decimals) {
    if (v == 0.0) v = 0.0;  // drop negative zero
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, decimals);
    if (ec != std::errc{}) throw IoError("cannot format number");
    std::string s(buf, p);
    // "-0.000000" after rounding reads better as 0.
    if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
    return s;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("read failed: " + path.string());
    return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.close();
    if (!out) throw IoError("write failed: " + path.string());
}

std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw IoError("sha256 failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

CsvWriter::CsvWriter(std::vector<std::string> header) : width_(header.size()) { row(std::move(header)); }

void CsvWriter::row(std::vector<std::string> cells) {
    if (cells.size() != width_) throw IoError("csv row width mismatch");
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out_ += ',';
        out_ += cells[i];
    }
    out_ += '\n';
}

std::vector<std::string> split_csv_line(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.emplace_back(line.substr(start, comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

namespace {

const std::vector<std::string> kPanelHeader{
    "market_id", "t", "latent_logodds", "true_prob", "observed_prob", "shock", "mm_active", "lip_active",
    "api_intensity", "professional_share", "quoted_spread", "effective_spread", "realized_spread",
    "adverse_selection", "depth", "price_impact", "yes_price", "no_price", "family_id",
    "cost_slow", "cost_fast", "cost_hedged", "cost_informed"};

const std::vector<std::string> kMarketsHeader{
    "market_id", "category", "info_density", "hedgeability", "resolution_clarity", "baseline_vol",
    "anchor_logodds", "mean_reversion", "jump_intensity", "mm_activation", "lip_activation", "api_adoption",
    "api_ramp_length", "outcome", "family_id"};

double parse_fixed(const std::string& s) {
    double v = 0.0;
    std::from_chars(s.data(), s.data() + s.size(), v);
    return v;
}

std::string opt_int(const std::optional<int>& v) { return v ? std::to_string(*v) : std::string(); }
std::string flag(bool b) { return b ? "1" : "0"; }

std::vector<std::string_view> lines_of(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (start < text.size()) {
        auto nl = text.find('\n', start);
        if (nl == std::string_view::npos) nl = text.size();
        auto line = text.substr(start, nl - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (!line.empty()) out.push_back(line);
        start = nl + 1;
    }
    return out;
}

struct RowReader {
    const std::vector<std::string>& cells;
    std::size_t line;

    [[noreturn]] void fail(std::size_t col, std::string_view want) const {
        throw DataError("line " + std::to_string(line) + ", column " + std::to_string(col + 1) + ": expected " +
                        std::string(want) + ", got '" + cells[col] + "'");
    }
    double real(std::size_t col) const {
        const auto& s = cells[col];
        double v = 0.0;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || p != s.data() + s.size() || !std::isfinite(v)) fail(col, "a number");
        return v;
    }
    int integer(std::size_t col) const {
        const auto& s = cells[col];
        int v = 0;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || p != s.data() + s.size()) fail(col, "an integer");
        return v;
    }
    std::optional<int> opt(std::size_t col) const {
        if (cells[col].empty()) return std::nullopt;
        return integer(col);
    }
    bool boolean(std::size_t col) const {
        if (cells[col] == "1") return true;
        if (cells[col] == "0") return false;
        fail(col, "0 or 1");
    }
};

void check_header(std::string_view line, const std::vector<std::string>& want, std::string_view what) {
    if (split_csv_line(line) != want) throw DataError(std::string(what) + ": unexpected header");
}

}  // namespace

std::string panel_csv(const Panel& panel) {
    CsvWriter w(kPanelHeader);
    for (const auto& r : panel.rows) {
        // Written so that realized = effective - adverse selection holds on the rounded values.
        const auto eff = fixed(r.effective_spread);
        const auto as = fixed(r.adverse_selection);
        const double realized = parse_fixed(eff) - parse_fixed(as);
        std::vector<std::string> c{
            std::to_string(r.market_id), std::to_string(r.t), fixed(r.latent_logodds), fixed(r.true_prob),
            fixed(r.observed_prob), flag(r.shock), flag(r.mm_active), flag(r.lip_active), fixed(r.api_intensity),
            fixed(r.professional_share), fixed(r.quoted_spread), eff, fixed(realized), as, fixed(r.depth),
            fixed(r.price_impact), fixed(r.yes_price), fixed(r.no_price), opt_int(r.family_id)};
        for (double cost : r.archetype_costs) c.push_back(fixed(cost));
        w.row(std::move(c));
    }
    return w.str();
}

std::string markets_csv(const Panel& panel) {
    CsvWriter w(kMarketsHeader);
    for (const auto& m : panel.markets) {
        const auto& a = m.attrs;
        const auto& s = m.schedule;
        w.row({std::to_string(m.market_id), std::string(to_string(a.category)), fixed(a.info_density),
               fixed(a.hedgeability), fixed(a.resolution_clarity), fixed(a.baseline_vol), fixed(a.anchor_logodds),
               fixed(a.mean_reversion), fixed(a.jump_intensity), opt_int(s.mm_activation), opt_int(s.lip_activation),
               opt_int(s.api_adoption), std::to_string(s.api_ramp_length), std::to_string(m.outcome),
               opt_int(m.family_id)});
    }
    return w.str();
}

std::vector<MarketSpec> parse_markets_csv(std::string_view text) {
    const auto lines = lines_of(text);
    if (lines.empty()) throw DataError("markets.csv: empty file");
    check_header(lines[0], kMarketsHeader, "markets.csv");
    std::vector<MarketSpec> out;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto cells = split_csv_line(lines[i]);
        if (cells.size() != kMarketsHeader.size())
            throw DataError("markets.csv line " + std::to_string(i + 1) + ": wrong number of fields");
        RowReader rd{cells, i + 1};
        MarketSpec m;
        m.market_id = rd.integer(0);
        try {
            m.attrs.category = parse_category(cells[1]);
        } catch (const std::exception&) {
            rd.fail(1, "a category");
        }
        m.attrs.info_density = rd.real(2);
        m.attrs.hedgeability = rd.real(3);
        m.attrs.resolution_clarity = rd.real(4);
        m.attrs.baseline_vol = rd.real(5);
        m.attrs.anchor_logodds = rd.real(6);
        m.attrs.mean_reversion = rd.real(7);
        m.attrs.jump_intensity = rd.real(8);
        m.schedule.mm_activation = rd.opt(9);
        m.schedule.lip_activation = rd.opt(10);
        m.schedule.api_adoption = rd.opt(11);
        m.schedule.api_ramp_length = rd.integer(12);
        m.outcome = rd.integer(13);
        m.family_id = rd.opt(14);
        if (m.market_id != static_cast<int>(out.size()))
            throw DataError("markets.csv line " + std::to_string(i + 1) + ": market ids must be 0..M-1 in order");
        if (m.outcome != 0 && m.outcome != 1)
            throw DataError("markets.csv line " + std::to_string(i + 1) + ": outcome must be 0 or 1");
        out.push_back(m);
    }
    return out;
}

Panel parse_panel_csv(std::string_view text, std::vector<MarketSpec> markets) {
    const auto lines = lines_of(text);
    if (lines.empty()) throw DataError("panel.csv: empty file");
    check_header(lines[0], kPanelHeader, "panel.csv");
    Panel p;
    p.markets = std::move(markets);
    p.n_markets = static_cast<int>(p.markets.size());
    p.rows.reserve(lines.size() - 1);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto cells = split_csv_line(lines[i]);
        if (cells.size() != kPanelHeader.size())
            throw DataError("panel.csv line " + std::to_string(i + 1) + ": wrong number of fields");
        RowReader rd{cells, i + 1};
        PanelRow r;
        r.market_id = rd.integer(0);
        r.t = rd.integer(1);
        r.latent_logodds = rd.real(2);
        r.true_prob = rd.real(3);
        r.observed_prob = rd.real(4);
        r.shock = rd.boolean(5);
        r.mm_active = rd.boolean(6);
        r.lip_active = rd.boolean(7);
        r.api_intensity = rd.real(8);
        r.professional_share = rd.real(9);
        r.quoted_spread = rd.real(10);
        r.effective_spread = rd.real(11);
        r.realized_spread = rd.real(12);
        r.adverse_selection = rd.real(13);
        r.depth = rd.real(14);
        r.price_impact = rd.real(15);
        r.yes_price = rd.real(16);
        r.no_price = rd.real(17);
        r.family_id = rd.opt(18);
        for (std::size_t a = 0; a < kArchetypeCount; ++a) r.archetype_costs[a] = rd.real(19 + a);
        if (r.market_id < 0 || r.market_id >= p.n_markets)
            throw DataError("panel.csv line " + std::to_string(i + 1) + ": market_id not in markets.csv");
        p.rows.push_back(r);
    }
    if (p.n_markets == 0 || p.rows.size() % static_cast<std::size_t>(p.n_markets) != 0)
        throw DataError("panel.csv: non-rectangular panel");
    p.n_periods = static_cast<int>(p.rows.size() / static_cast<std::size_t>(p.n_markets));
    return p;
}

Panel load_panel(const std::filesystem::path& panel_csv_path) {
    const auto markets_path = panel_csv_path.parent_path() / "markets.csv";
    auto markets = parse_markets_csv(read_file(markets_path));
    return parse_panel_csv(read_file(panel_csv_path), std::move(markets));
}

}  // namespace pmlab::io
