#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"

namespace advkit::svg {

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

struct Bar {
  std::string label;
  double value = 0.0;
};

namespace detail {

inline constexpr double kWidth = 640, kHeight = 420;
inline constexpr double kLeft = 70, kRight = 160, kTop = 40, kBottom = 60;
inline constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                           "#9467bd", "#8c564b", "#e377c2", "#17becf"};

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
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

inline std::string num(double v) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os.setf(std::ios::fixed);
  os.precision(2);
  os << v;
  return os.str();
}

inline std::string tick(double v) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os.precision(4);
  os << v;
  return os.str();
}

inline void header(std::ostringstream& os, const std::string& title) {
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << num(kWidth / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
     << "</text>\n";
}

struct Axes {
  double xmin, xmax, ymin, ymax;

  double px(double x) const { return kLeft + (x - xmin) / (xmax - xmin) * (kWidth - kLeft - kRight); }
  double py(double y) const { return kHeight - kBottom - (y - ymin) / (ymax - ymin) * (kHeight - kTop - kBottom); }
};

inline void frame(std::ostringstream& os, const Axes& ax, const std::string& xlabel, const std::string& ylabel,
                  bool x_ticks) {
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  os << "<line x1=\"" << num(x0) << "\" y1=\"" << num(y0) << "\" x2=\"" << num(x1) << "\" y2=\"" << num(y0)
     << "\" stroke=\"black\"/>\n"
     << "<line x1=\"" << num(x0) << "\" y1=\"" << num(y0) << "\" x2=\"" << num(x0) << "\" y2=\"" << num(y1)
     << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double y = ax.ymin + (ax.ymax - ax.ymin) * i / 5.0;
    os << "<text x=\"" << num(x0 - 6) << "\" y=\"" << num(ax.py(y) + 4) << "\" text-anchor=\"end\">" << tick(y)
       << "</text>\n";
    if (x_ticks) {
      const double x = ax.xmin + (ax.xmax - ax.xmin) * i / 5.0;
      os << "<text x=\"" << num(ax.px(x)) << "\" y=\"" << num(y0 + 16) << "\" text-anchor=\"middle\">" << tick(x)
         << "</text>\n";
    }
  }
  os << "<text x=\"" << num((x0 + x1) / 2) << "\" y=\"" << num(kHeight - 16) << "\" text-anchor=\"middle\">"
     << escape(xlabel) << "</text>\n"
     << "<text x=\"18\" y=\"" << num((y0 + y1) / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
     << num((y0 + y1) / 2) << ")\">" << escape(ylabel) << "</text>\n";
}

inline std::pair<double, double> padded(double lo, double hi) {
  if (lo == hi) return {lo - 0.5, hi + 0.5};
  return {lo, hi};
}

}  // namespace detail

/// Standalone SVG line chart, one polyline per series.
inline std::string line_chart(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                              const std::vector<Series>& series) {
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = 0.0, ymax = 0.0;
  std::size_t n = 0;
  for (const auto& s : series)
    for (const auto& [x, y] : s.points) {
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
      ++n;
    }
  if (n == 0) throw Error(ErrorKind::data, "nothing to plot");
  const auto [x0, x1] = detail::padded(xmin, xmax);
  const auto [y0, y1] = detail::padded(ymin, ymax);
  const detail::Axes ax{x0, x1, y0, y1};

  std::ostringstream os;
  detail::header(os, title);
  detail::frame(os, ax, xlabel, ylabel, true);
  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* color = detail::kPalette[i % std::size(detail::kPalette)];
    auto pts = series[i].points;
    std::sort(pts.begin(), pts.end());
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t j = 0; j < pts.size(); ++j)
      os << (j ? " " : "") << detail::num(ax.px(pts[j].first)) << ',' << detail::num(ax.py(pts[j].second));
    os << "\"/>\n";
    for (const auto& [x, y] : pts)
      os << "<circle cx=\"" << detail::num(ax.px(x)) << "\" cy=\"" << detail::num(ax.py(y)) << "\" r=\"3\" fill=\""
         << color << "\"/>\n";
    const double ly = detail::kTop + 18.0 * static_cast<double>(i);
    os << "<text x=\"" << detail::num(detail::kWidth - detail::kRight + 12) << "\" y=\"" << detail::num(ly + 4)
       << "\" fill=\"" << color << "\">" << detail::escape(series[i].name) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

/// Standalone SVG bar chart.
inline std::string bar_chart(const std::string& title, const std::string& ylabel, const std::vector<Bar>& bars) {
  if (bars.empty()) throw Error(ErrorKind::data, "nothing to plot");
  double ymax = 0.0;
  for (const auto& b : bars) ymax = std::max(ymax, b.value);
  if (ymax <= 0.0) ymax = 1.0;
  const detail::Axes ax{0.0, static_cast<double>(bars.size()), 0.0, ymax};

  std::ostringstream os;
  detail::header(os, title);
  detail::frame(os, ax, "", ylabel, false);
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const double left = ax.px(static_cast<double>(i) + 0.15), right = ax.px(static_cast<double>(i) + 0.85);
    const double top = ax.py(std::max(0.0, bars[i].value)), base = ax.py(0.0);
    os << "<rect x=\"" << detail::num(left) << "\" y=\"" << detail::num(top) << "\" width=\""
       << detail::num(right - left) << "\" height=\"" << detail::num(base - top) << "\" fill=\""
       << detail::kPalette[i % std::size(detail::kPalette)] << "\"/>\n"
       << "<text x=\"" << detail::num((left + right) / 2) << "\" y=\"" << detail::num(base + 16)
       << "\" text-anchor=\"middle\">" << detail::escape(bars[i].label) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace advkit::svg
