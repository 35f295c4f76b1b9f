#pragma once

#include <array>
#include <string>
#include <vector>

#include "fdm/terrain.hpp"

namespace fdm {

struct SvgSeries {
    std::string label;
    std::string color;  // "#rrggbb"
    std::vector<std::array<double, 2>> points;
};

// Cycling chart palette.
const std::string& svg_color(std::size_t index);

// Line chart with axes, ticks, and a legend. Output is deterministic text.
std::string svg_line_chart(const std::vector<SvgSeries>& series, const std::string& title,
                           const std::string& x_label, const std::string& y_label,
                           int width = 720, int height = 440);

// Box-and-whisker summary; whiskers span the 5% and 95% quantiles, so the
// drawing is capped at the 95% quantile by construction.
struct SvgBox {
    std::string label;
    double q5 = 0.0, q25 = 0.0, q50 = 0.0, q75 = 0.0, q95 = 0.0;
};

std::string svg_box_plot(const std::vector<SvgBox>& boxes, const std::string& title,
                         const std::string& y_label, int width = 720, int height = 440);

// Grayscale heightmap with world-frame paths drawn over it. Each path gets a
// filled circle at its start and a hollow circle at its end.
std::string svg_path_overlay(const TerrainGrid& grid, const std::vector<SvgSeries>& paths,
                             const std::string& title, int width = 720);

}  // namespace fdm
