#pragma once

#include <string>
#include <utility>
#include <vector>

namespace splicegan {

struct PlotSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

// Minimal self-contained SVG line plot on the unit square (ROC / PR style).
// No timestamps or other run-varying content is embedded, so output bytes
// depend only on the data.
void write_svg_plot(const std::string& path, const std::string& title,
                    const std::string& x_label, const std::string& y_label,
                    const std::vector<PlotSeries>& series, bool draw_diagonal);

}  // namespace splicegan
