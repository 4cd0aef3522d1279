#pragma once

// Minimal deterministic SVG charts on a fixed 800x600 canvas.

#include <string>
#include <utility>
#include <vector>

namespace guidance_lab {

struct Series {
    std::string label;
    std::vector<std::pair<double, double>> points;
};

struct ChartLabels {
    std::string title;
    std::string x;
    std::string y;
};

// Circles of radius 2, one palette colour per series. No points gives axes only.
std::string svg_scatter(const std::vector<Series>& series, const ChartLabels& labels);

// One polyline (with point markers) per series, points drawn in x order.
std::string svg_lines(const std::vector<Series>& series, const ChartLabels& labels);

}  // namespace guidance_lab
