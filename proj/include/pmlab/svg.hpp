#pragma once

#include <optional>
#include <string>
#include <vector>

namespace pmlab::svg {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> lo;  // optional band, same length as y
    std::vector<double> hi;
    bool markers = true;
};

struct LinePanel {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<Series> series;
    std::optional<double> hline;     // horizontal reference line
    std::optional<double> vline;     // vertical reference line
    bool diagonal = false;           // y = x reference (reliability diagrams)
    std::optional<std::pair<double, double>> x_range;
    std::optional<std::pair<double, double>> y_range;
};

struct BarGroup {
    std::string label;
    std::vector<double> values;  // one per series
};

struct BarPanel {
    std::string title;
    std::string y_label;
    std::vector<std::string> series;
    std::vector<BarGroup> groups;
};

/// Panels side by side, shared legend per panel.
std::string line_chart(const std::string& title, const std::vector<LinePanel>& panels);
std::string bar_chart(const std::string& title, const std::vector<BarPanel>& panels);

std::string escape(const std::string& text);

}  // namespace pmlab::svg
