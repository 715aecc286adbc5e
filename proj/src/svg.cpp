#include "pmlab/svg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pmlab/io.hpp"

namespace pmlab::svg {

namespace {

constexpr double kPanelW = 420.0;
constexpr double kPanelH = 300.0;
constexpr double kTitleH = 36.0;
constexpr double kLeft = 62.0, kRight = 16.0, kTop = 34.0, kBottom = 48.0;
constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string num(double v) { return io::fixed(v, 2); }

struct Scale {
    double lo, hi, px_lo, px_hi;
    double operator()(double v) const {
        if (hi == lo) return 0.5 * (px_lo + px_hi);
        return px_lo + (v - lo) / (hi - lo) * (px_hi - px_lo);
    }
};

std::pair<double, double> padded(double lo, double hi) {
    if (!std::isfinite(lo) || !std::isfinite(hi)) return {0.0, 1.0};
    if (hi - lo < 1e-12) return {lo - 0.5, hi + 0.5};
    const double pad = 0.06 * (hi - lo);
    return {lo - pad, hi + pad};
}

// Round-number tick positions covering [lo, hi].
std::vector<double> ticks(double lo, double hi, int target = 5) {
    const double span = hi - lo;
    if (!(span > 0.0)) return {lo};
    const double raw = span / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 2.5, 5.0, 10.0}) {
        if (m * mag >= raw) {
            step = m * mag;
            break;
        }
    }
    std::vector<double> out;
    for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * step; v += step) out.push_back(std::abs(v) < 1e-12 ? 0.0 : v);
    return out;
}

std::string tick_label(double v) {
    std::string s = io::fixed(v, 3);
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
    return s;
}

void text(std::string& out, double x, double y, const std::string& t, const char* anchor = "middle", int size = 11,
          const char* extra = "") {
    out += "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" text-anchor=\"" + anchor + "\" font-size=\"" +
           std::to_string(size) + "\"" + extra + ">" + escape(t) + "</text>\n";
}

void line(std::string& out, double x1, double y1, double x2, double y2, const char* stroke, const char* extra = "") {
    out += "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) + "\" y2=\"" + num(y2) +
           "\" stroke=\"" + stroke + "\"" + extra + "/>\n";
}

void axes(std::string& out, double ox, double oy, const Scale& sx, const Scale& sy, const std::string& title,
          const std::string& xl, const std::string& yl, bool x_ticks = true) {
    const double x0 = sx.px_lo, x1 = sx.px_hi, y0 = sy.px_lo, y1 = sy.px_hi;
    out += "<rect x=\"" + num(x0) + "\" y=\"" + num(y1) + "\" width=\"" + num(x1 - x0) + "\" height=\"" +
           num(y0 - y1) + "\" fill=\"none\" stroke=\"#444\"/>\n";
    for (double v : ticks(sy.lo, sy.hi)) {
        const double y = sy(v);
        line(out, x0 - 4, y, x0, y, "#444");
        line(out, x0, y, x1, y, "#ddd", " stroke-width=\"0.5\"");
        text(out, x0 - 6, y + 4, tick_label(v), "end", 10);
    }
    if (x_ticks) {
        for (double v : ticks(sx.lo, sx.hi)) {
            const double x = sx(v);
            line(out, x, y0, x, y0 + 4, "#444");
            text(out, x, y0 + 16, tick_label(v), "middle", 10);
        }
    }
    text(out, ox + kPanelW / 2, oy + 20, title, "middle", 13, " font-weight=\"bold\"");
    text(out, (x0 + x1) / 2, oy + kPanelH - 8, xl);
    const double cy = (y0 + y1) / 2;
    const double cx = ox + 14;
    out += "<text x=\"" + num(cx) + "\" y=\"" + num(cy) + "\" text-anchor=\"middle\" font-size=\"11\" transform=\"rotate(-90 " +
           num(cx) + " " + num(cy) + ")\">" + escape(yl) + "</text>\n";
}

void legend(std::string& out, double x, double y, const std::vector<std::string>& labels) {
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double yy = y + 14.0 * static_cast<double>(i);
        out += "<rect x=\"" + num(x) + "\" y=\"" + num(yy - 8) + "\" width=\"10\" height=\"10\" fill=\"" +
               kPalette[i % 6] + "\"/>\n";
        text(out, x + 14, yy + 1, labels[i], "start", 10);
    }
}

std::string open(double w, double h, const std::string& title) {
    std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(w) + "\" height=\"" + num(h) +
           "\" viewBox=\"0 0 " + num(w) + " " + num(h) + "\" font-family=\"sans-serif\">\n";
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    text(out, w / 2, 22, title, "middle", 15, " font-weight=\"bold\"");
    return out;
}

}  // namespace

std::string escape(const std::string& t) {
    std::string out;
    for (char c : t) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

std::string line_chart(const std::string& title, const std::vector<LinePanel>& panels) {
    const double w = kPanelW * static_cast<double>(std::max<std::size_t>(panels.size(), 1));
    std::string out = open(w, kPanelH + kTitleH, title);
    for (std::size_t p = 0; p < panels.size(); ++p) {
        const auto& pn = panels[p];
        const double ox = kPanelW * static_cast<double>(p), oy = kTitleH;
        double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo, ylo = xlo, yhi = -xlo;
        for (const auto& s : pn.series) {
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                if (!std::isfinite(s.y[i])) continue;
                xlo = std::min(xlo, s.x[i]);
                xhi = std::max(xhi, s.x[i]);
                ylo = std::min({ylo, s.y[i], s.lo.empty() ? s.y[i] : s.lo[i]});
                yhi = std::max({yhi, s.y[i], s.hi.empty() ? s.y[i] : s.hi[i]});
            }
        }
        if (pn.hline) {
            ylo = std::min(ylo, *pn.hline);
            yhi = std::max(yhi, *pn.hline);
        }
        auto [xa, xb] = pn.x_range ? *pn.x_range : padded(xlo, xhi);
        auto [ya, yb] = pn.y_range ? *pn.y_range : padded(ylo, yhi);
        const Scale sx{xa, xb, ox + kLeft, ox + kPanelW - kRight};
        const Scale sy{ya, yb, oy + kPanelH - kBottom, oy + kTop};
        axes(out, ox, oy, sx, sy, pn.title, pn.x_label, pn.y_label);
        if (pn.hline) line(out, sx.px_lo, sy(*pn.hline), sx.px_hi, sy(*pn.hline), "#888", " stroke-dasharray=\"4 3\"");
        if (pn.vline) line(out, sx(*pn.vline), sy.px_lo, sx(*pn.vline), sy.px_hi, "#888", " stroke-dasharray=\"4 3\"");
        if (pn.diagonal)
            line(out, sx(std::max(xa, ya)), sy(std::max(xa, ya)), sx(std::min(xb, yb)), sy(std::min(xb, yb)), "#888",
                 " stroke-dasharray=\"4 3\"");
        std::vector<std::string> labels;
        for (std::size_t si = 0; si < pn.series.size(); ++si) {
            const auto& s = pn.series[si];
            const char* color = kPalette[si % 6];
            labels.push_back(s.label);
            if (!s.lo.empty()) {
                std::string pts;
                for (std::size_t i = 0; i < s.x.size(); ++i)
                    if (std::isfinite(s.hi[i])) pts += num(sx(s.x[i])) + "," + num(sy(s.hi[i])) + " ";
                for (std::size_t i = s.x.size(); i-- > 0;)
                    if (std::isfinite(s.lo[i])) pts += num(sx(s.x[i])) + "," + num(sy(s.lo[i])) + " ";
                out += "<polygon points=\"" + pts + "\" fill=\"" + color + "\" fill-opacity=\"0.15\" stroke=\"none\"/>\n";
            }
            std::string pts;
            for (std::size_t i = 0; i < s.x.size(); ++i)
                if (std::isfinite(s.y[i])) pts += num(sx(s.x[i])) + "," + num(sy(s.y[i])) + " ";
            out += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.8\"/>\n";
            if (s.markers)
                for (std::size_t i = 0; i < s.x.size(); ++i)
                    if (std::isfinite(s.y[i]))
                        out += "<circle cx=\"" + num(sx(s.x[i])) + "\" cy=\"" + num(sy(s.y[i])) + "\" r=\"2.5\" fill=\"" +
                               color + "\"/>\n";
        }
        legend(out, sx.px_lo + 8, sy.px_hi + 14, labels);
    }
    out += "</svg>\n";
    return out;
}

std::string bar_chart(const std::string& title, const std::vector<BarPanel>& panels) {
    const double w = kPanelW * static_cast<double>(std::max<std::size_t>(panels.size(), 1));
    std::string out = open(w, kPanelH + kTitleH + 40.0, title);
    for (std::size_t p = 0; p < panels.size(); ++p) {
        const auto& pn = panels[p];
        const double ox = kPanelW * static_cast<double>(p), oy = kTitleH;
        double lo = 0.0, hi = 0.0;
        for (const auto& g : pn.groups)
            for (double v : g.values) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        auto [ya, yb] = padded(lo, hi);
        if (lo >= 0.0) ya = 0.0;
        if (hi <= 0.0) yb = 0.0;
        const Scale sx{0.0, static_cast<double>(pn.groups.size()), ox + kLeft, ox + kPanelW - kRight};
        const Scale sy{ya, yb, oy + kPanelH - kBottom, oy + kTop};
        axes(out, ox, oy, sx, sy, pn.title, "", pn.y_label, false);
        line(out, sx.px_lo, sy(0.0), sx.px_hi, sy(0.0), "#444");
        const double slot = (sx.px_hi - sx.px_lo) / std::max<double>(1.0, static_cast<double>(pn.groups.size()));
        const double bw = 0.8 * slot / std::max<double>(1.0, static_cast<double>(pn.series.size()));
        for (std::size_t g = 0; g < pn.groups.size(); ++g) {
            const double gx = sx.px_lo + slot * static_cast<double>(g) + 0.1 * slot;
            for (std::size_t s = 0; s < pn.groups[g].values.size(); ++s) {
                const double v = pn.groups[g].values[s];
                const double y = sy(std::max(v, 0.0)), h = std::abs(sy(v) - sy(0.0));
                out += "<rect x=\"" + num(gx + bw * static_cast<double>(s)) + "\" y=\"" + num(y) + "\" width=\"" +
                       num(bw) + "\" height=\"" + num(h) + "\" fill=\"" + kPalette[s % 6] + "\"/>\n";
            }
            const double cx = sx.px_lo + slot * (static_cast<double>(g) + 0.5);
            const double cy = sy.px_lo + 12;
            out += "<text x=\"" + num(cx) + "\" y=\"" + num(cy) + "\" text-anchor=\"end\" font-size=\"9\" transform=\"rotate(-30 " +
                   num(cx) + " " + num(cy) + ")\">" + escape(pn.groups[g].label) + "</text>\n";
        }
        legend(out, sx.px_hi - 110, sy.px_hi + 14, pn.series);
    }
    out += "</svg>\n";
    return out;
}

}  // namespace pmlab::svg
