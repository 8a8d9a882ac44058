#pragma once

#include <string>
#include <vector>

namespace dprobe::svg {

enum class Style { Line, Points, Steps };

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    Style style = Style::Line;
};

struct Chart {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<Series> series;
};

/// Standalone SVG document (fixed size, autoscaled axes, legend).
std::string render(const Chart& chart);

} // namespace dprobe::svg
