#pragma once

#include <string>
#include <utility>
#include <vector>

namespace rowswap {

struct ChartSeries {
  std::string name;
  std::vector<std::pair<double, double>> points;
  bool dashed = false;
};

struct LineChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = true;
  std::vector<ChartSeries> series;
};

// Self-contained SVG document. Non-positive y values are dropped on a log
// axis, which splits the polyline at the gap.
std::string render_svg(const LineChart& chart);

}  // namespace rowswap
