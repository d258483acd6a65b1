#include "rowswap/svg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "rowswap/format.hpp"

namespace rowswap {

namespace {

constexpr double kWidth = 800;
constexpr double kHeight = 480;
constexpr double kLeft = 80;
constexpr double kRight = 180;
constexpr double kTop = 40;
constexpr double kBottom = 60;

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string escape(const std::string& s) {
  std::string out;
  for (const char c : s) {
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

std::string px(double v) { return format_fixed(v, 2); }

std::string tick_label(double v) {
  if (v != 0 && (std::fabs(v) >= 1e5 || std::fabs(v) < 1e-3)) {
    const int e = static_cast<int>(std::floor(std::log10(std::fabs(v)) + 1e-9));
    return "1e" + std::to_string(e);
  }
  return format_number(std::round(v * 1000) / 1000);
}

}  // namespace

std::string render_svg(const LineChart& chart) {
  double x_min = std::numeric_limits<double>::infinity();
  double x_max = -x_min;
  double y_min = x_min;
  double y_max = -x_min;
  for (const auto& s : chart.series) {
    for (const auto& [x, y] : s.points) {
      if (!std::isfinite(x) || !std::isfinite(y) || (chart.log_y && y <= 0)) continue;
      const double yy = chart.log_y ? std::log10(y) : y;
      x_min = std::min(x_min, x);
      x_max = std::max(x_max, x);
      y_min = std::min(y_min, yy);
      y_max = std::max(y_max, yy);
    }
  }
  if (!std::isfinite(x_min)) {
    x_min = 0;
    x_max = 1;
    y_min = 0;
    y_max = 1;
  }
  if (chart.log_y) {
    y_min = std::floor(y_min);
    y_max = std::ceil(y_max);
  }
  if (x_max <= x_min) x_max = x_min + 1;
  if (y_max <= y_min) y_max = y_min + 1;

  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto sx = [&](double x) { return kLeft + (x - x_min) / (x_max - x_min) * plot_w; };
  auto sy = [&](double y) { return kTop + plot_h - (y - y_min) / (y_max - y_min) * plot_h; };

  std::ostringstream o;
  o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << px(kWidth / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << escape(chart.title)
    << "</text>\n";

  // Axes and grid.
  o << "<g stroke=\"#cccccc\" stroke-width=\"1\">\n";
  const int y_ticks = chart.log_y ? static_cast<int>(y_max - y_min) : 5;
  const int y_step = chart.log_y ? std::max(1, y_ticks / 10) : 1;
  std::ostringstream labels;
  for (int i = 0; i <= y_ticks; i += y_step) {
    const double yv = y_min + (y_max - y_min) * i / y_ticks;
    const double yy = sy(yv);
    o << "<line x1=\"" << px(kLeft) << "\" y1=\"" << px(yy) << "\" x2=\"" << px(kLeft + plot_w) << "\" y2=\"" << px(yy)
      << "\"/>\n";
    labels << "<text x=\"" << px(kLeft - 6) << "\" y=\"" << px(yy + 4) << "\" text-anchor=\"end\">"
           << tick_label(chart.log_y ? std::pow(10.0, yv) : yv) << "</text>\n";
  }
  for (int i = 0; i <= 5; ++i) {
    const double xv = x_min + (x_max - x_min) * i / 5;
    const double xx = sx(xv);
    o << "<line x1=\"" << px(xx) << "\" y1=\"" << px(kTop) << "\" x2=\"" << px(xx) << "\" y2=\"" << px(kTop + plot_h)
      << "\"/>\n";
    labels << "<text x=\"" << px(xx) << "\" y=\"" << px(kTop + plot_h + 16) << "\" text-anchor=\"middle\">"
           << tick_label(xv) << "</text>\n";
  }
  o << "</g>\n";
  o << "<rect x=\"" << px(kLeft) << "\" y=\"" << px(kTop) << "\" width=\"" << px(plot_w) << "\" height=\"" << px(plot_h)
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  o << labels.str();
  o << "<text x=\"" << px(kLeft + plot_w / 2) << "\" y=\"" << px(kHeight - 16) << "\" text-anchor=\"middle\">"
    << escape(chart.x_label) << "</text>\n";
  o << "<text transform=\"translate(18 " << px(kTop + plot_h / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
    << escape(chart.y_label) << "</text>\n";

  for (std::size_t si = 0; si < chart.series.size(); ++si) {
    const auto& s = chart.series[si];
    const char* color = kPalette[si % std::size(kPalette)];
    std::vector<std::string> runs(1);
    for (const auto& [x, y] : s.points) {
      if (!std::isfinite(x) || !std::isfinite(y) || (chart.log_y && y <= 0)) {
        if (!runs.back().empty()) runs.emplace_back();
        continue;
      }
      const double yy = chart.log_y ? std::log10(y) : y;
      if (!runs.back().empty()) runs.back() += ' ';
      runs.back() += px(sx(x)) + "," + px(sy(yy));
    }
    for (const auto& r : runs) {
      if (r.empty()) continue;
      o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\""
        << (s.dashed ? " stroke-dasharray=\"6 3\"" : "") << " points=\"" << r << "\"/>\n";
    }
    const double ly = kTop + 14 + 18.0 * static_cast<double>(si);
    const double lx = kLeft + plot_w + 12;
    o << "<line x1=\"" << px(lx) << "\" y1=\"" << px(ly - 4) << "\" x2=\"" << px(lx + 24) << "\" y2=\"" << px(ly - 4)
      << "\" stroke=\"" << color << "\" stroke-width=\"2\"" << (s.dashed ? " stroke-dasharray=\"6 3\"" : "")
      << "/>\n";
    o << "<text x=\"" << px(lx + 30) << "\" y=\"" << px(ly) << "\">" << escape(s.name) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace rowswap
