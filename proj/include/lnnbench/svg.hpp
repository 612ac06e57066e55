#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lnnbench {

struct PlotSeries {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

struct LinePlot {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<PlotSeries> series;
  int width = 960;
  int height = 600;
};

namespace detail {

inline std::string svg_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// Tick step of the form {1,2,5} * 10^k giving roughly `target` ticks.
inline double nice_step(double range, int target) {
  if (range <= 0.0) {
    return 1.0;
  }
  const double raw = range / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double norm = raw / mag;
  double step = 10.0;
  if (norm <= 1.0) {
    step = 1.0;
  } else if (norm <= 2.0) {
    step = 2.0;
  } else if (norm <= 5.0) {
    step = 5.0;
  }
  return step * mag;
}

inline std::vector<double> ticks(double lo, double hi, int target = 6) {
  const double step = nice_step(hi - lo, target);
  std::vector<double> out;
  double t = std::ceil(lo / step) * step;
  for (; t <= hi + step * 1e-9; t += step) {
    out.push_back(std::abs(t) < step * 1e-9 ? 0.0 : t);
  }
  return out;
}

}  // namespace detail

/// Writes a minimal self-contained SVG line chart. Intended for the
/// figure analogues; the authoritative numbers always go to CSV too.
inline void write_svg(const LinePlot& plot, const std::filesystem::path& path) {
  static constexpr std::array<const char*, 10> kPalette = {
      "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
      "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

  double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;
  bool first = true;
  for (const PlotSeries& s : plot.series) {
    for (const auto& [x, y] : s.points) {
      if (first) {
        x_min = x_max = x;
        y_min = y_max = y;
        first = false;
      } else {
        x_min = std::min(x_min, x);
        x_max = std::max(x_max, x);
        y_min = std::min(y_min, y);
        y_max = std::max(y_max, y);
      }
    }
  }
  // Degenerate ranges (single point, constant series) get padding so
  // the projection below stays finite.
  if (x_max - x_min <= 0.0) {
    x_min -= 0.5;
    x_max += 0.5;
  }
  if (y_max - y_min <= 0.0) {
    y_min -= 0.5;
    y_max += 0.5;
  }

  const double ml = 78, mr = 160, mt = 48, mb = 58;
  const double pw = plot.width - ml - mr;
  const double ph = plot.height - mt - mb;
  const auto px = [&](double x) {
    return ml + (x - x_min) / (x_max - x_min) * pw;
  };
  const auto py = [&](double y) {
    return mt + ph - (y - y_min) / (y_max - y_min) * ph;
  };

  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("write_svg: cannot open " + path.string());
  }

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << plot.width
      << "\" height=\"" << plot.height << "\" viewBox=\"0 0 " << plot.width
      << ' ' << plot.height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << (ml + pw / 2) << "\" y=\"24\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"16\">"
      << plot.title << "</text>\n";

  // axes + grid
  for (double t : detail::ticks(y_min, y_max)) {
    const double y = py(t);
    out << "<line x1=\"" << ml << "\" y1=\"" << y << "\" x2=\"" << (ml + pw)
        << "\" y2=\"" << y << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    out << "<text x=\"" << (ml - 8) << "\" y=\"" << (y + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
           "font-size=\"11\">"
        << detail::svg_num(t) << "</text>\n";
  }
  for (double t : detail::ticks(x_min, x_max)) {
    const double x = px(t);
    out << "<line x1=\"" << x << "\" y1=\"" << mt << "\" x2=\"" << x
        << "\" y2=\"" << (mt + ph)
        << "\" stroke=\"#eeeeee\" stroke-width=\"1\"/>\n";
    out << "<text x=\"" << x << "\" y=\"" << (mt + ph + 18)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"11\">"
        << detail::svg_num(t) << "</text>\n";
  }
  out << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw
      << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
  out << "<text x=\"" << (ml + pw / 2) << "\" y=\"" << (plot.height - 14)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"13\">"
      << plot.x_label << "</text>\n";
  out << "<text x=\"20\" y=\"" << (mt + ph / 2)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"13\" transform=\"rotate(-90 20 "
      << (mt + ph / 2) << ")\">" << plot.y_label << "</text>\n";

  for (std::size_t s = 0; s < plot.series.size(); ++s) {
    const char* color = kPalette[s % kPalette.size()];
    const PlotSeries& series = plot.series[s];
    if (series.points.size() == 1) {
      out << "<circle cx=\"" << detail::svg_num(px(series.points[0].first))
          << "\" cy=\"" << detail::svg_num(py(series.points[0].second))
          << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    } else if (!series.points.empty()) {
      out << "<polyline fill=\"none\" stroke=\"" << color
          << "\" stroke-width=\"1.6\" points=\"";
      for (const auto& [x, y] : series.points) {
        out << detail::svg_num(px(x)) << ',' << detail::svg_num(py(y)) << ' ';
      }
      out << "\"/>\n";
    }
    const double ly = mt + 16 + 18 * static_cast<double>(s);
    out << "<line x1=\"" << (ml + pw + 12) << "\" y1=\"" << (ly - 4)
        << "\" x2=\"" << (ml + pw + 34) << "\" y2=\"" << (ly - 4)
        << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << (ml + pw + 40) << "\" y=\"" << ly
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << series.name
        << "</text>\n";
  }
  out << "</svg>\n";
  if (!out) {
    throw std::runtime_error("write_svg: write failed for " + path.string());
  }
}

}  // namespace lnnbench
