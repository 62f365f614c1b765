#pragma once

// Minimal SVG line plots: first column is x, every other column a curve.
// Curve styles cycle solid, dashed, dotted.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qbo/error.hpp"
#include "qbo/experiments.hpp"

namespace qbo::io {

enum class Axes { LogLog, Linear };

struct PlotOptions {
  Axes axes = Axes::Linear;
  std::string title;
  std::optional<double> reference_y;  ///< horizontal reference line
  double width = 640.0;
  double height = 440.0;
};

namespace detail {

struct AxisMap {
  double lo = 0.0, hi = 1.0, pix_lo = 0.0, pix_hi = 1.0;
  bool log = false;

  double operator()(double v) const {
    const double u = log ? std::log10(v) : v;
    return pix_lo + (u - lo) / (hi - lo) * (pix_hi - pix_lo);
  }
};

inline std::vector<double> linear_ticks(double lo, double hi) {
  const double raw = (hi - lo) / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double f : {1.0, 2.0, 5.0, 10.0})
    if (raw <= f * mag) {
      step = f * mag;
      break;
    }
  std::vector<double> ticks;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * step; t += step) ticks.push_back(t);
  return ticks;
}

inline std::string tick_label(double v, bool log) {
  std::ostringstream os;
  if (log) {
    os << "1e" << static_cast<int>(std::lround(v));
  } else {
    os << (std::abs(v) < 1e-12 ? 0.0 : v);
  }
  return os.str();
}

}  // namespace detail

inline std::string render_svg(const Dataset& d, const PlotOptions& opt) {
  if (d.columns.size() < 2) throw Error(ErrorCode::InvalidSpec, "a plot needs at least two columns");
  const bool log = opt.axes == Axes::LogLog;
  auto usable = [&](double v) { return std::isfinite(v) && (!log || v > 0.0); };

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
  for (const auto& row : d.rows) {
    if (!usable(row[0])) continue;
    for (std::size_t c = 1; c < row.size(); ++c) {
      if (!usable(row[c])) continue;
      xmin = std::min(xmin, row[0]);
      xmax = std::max(xmax, row[0]);
      ymin = std::min(ymin, row[c]);
      ymax = std::max(ymax, row[c]);
    }
  }
  if (opt.reference_y && usable(*opt.reference_y)) {
    ymin = std::min(ymin, *opt.reference_y);
    ymax = std::max(ymax, *opt.reference_y);
  }
  if (!std::isfinite(xmin)) {
    xmin = log ? 1.0 : 0.0;
    xmax = log ? 10.0 : 1.0;
    ymin = xmin;
    ymax = xmax;
  }
  auto to_axis = [&](double v) { return log ? std::log10(v) : v; };
  auto pad = [](double& lo, double& hi, bool is_log) {
    if (hi - lo <= 0.0) {
      const double w = is_log ? 0.5 : std::max(std::abs(lo) * 0.1, 0.5);
      lo -= w;
      hi += w;
    } else if (!is_log) {
      const double w = 0.05 * (hi - lo);
      lo -= w;
      hi += w;
    }
  };
  double ax_lo = to_axis(xmin), ax_hi = to_axis(xmax), ay_lo = to_axis(ymin), ay_hi = to_axis(ymax);
  if (log) {
    ax_lo = std::floor(ax_lo);
    ax_hi = std::ceil(ax_hi);
    ay_lo = std::floor(ay_lo);
    ay_hi = std::ceil(ay_hi);
  }
  pad(ax_lo, ax_hi, log);
  pad(ay_lo, ay_hi, log);

  const double left = 80, right = opt.width - 20, top = 40, bottom = opt.height - 50;
  const detail::AxisMap mx{ax_lo, ax_hi, left, right, log};
  const detail::AxisMap my{ay_lo, ay_hi, bottom, top, log};

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opt.width << "\" height=\"" << opt.height
     << "\" viewBox=\"0 0 " << opt.width << ' ' << opt.height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!opt.title.empty())
    os << "<text x=\"" << opt.width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << opt.title
       << "</text>\n";
  os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << right - left << "\" height=\"" << bottom - top
     << "\" fill=\"none\" stroke=\"black\"/>\n";

  auto ticks = [&](double lo, double hi) {
    if (!log) return detail::linear_ticks(lo, hi);
    std::vector<double> t;
    const double step = std::max(1.0, std::ceil((hi - lo) / 8.0));
    for (double v = std::ceil(lo); v <= hi + 1e-9; v += step) t.push_back(v);
    return t;
  };
  for (double t : ticks(ax_lo, ax_hi)) {
    const double px = left + (t - ax_lo) / (ax_hi - ax_lo) * (right - left);
    os << "<line x1=\"" << px << "\" y1=\"" << bottom << "\" x2=\"" << px << "\" y2=\"" << bottom + 5
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << px << "\" y=\"" << bottom + 18 << "\" text-anchor=\"middle\">" << detail::tick_label(t, log)
       << "</text>\n";
  }
  for (double t : ticks(ay_lo, ay_hi)) {
    const double py = bottom + (t - ay_lo) / (ay_hi - ay_lo) * (top - bottom);
    os << "<line x1=\"" << left - 5 << "\" y1=\"" << py << "\" x2=\"" << left << "\" y2=\"" << py
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << left - 8 << "\" y=\"" << py + 4 << "\" text-anchor=\"end\">" << detail::tick_label(t, log)
       << "</text>\n";
  }
  os << "<text x=\"" << (left + right) / 2 << "\" y=\"" << opt.height - 12 << "\" text-anchor=\"middle\">"
     << d.columns[0] << "</text>\n";

  if (opt.reference_y && usable(*opt.reference_y)) {
    const double py = my(*opt.reference_y);
    os << "<line x1=\"" << left << "\" y1=\"" << py << "\" x2=\"" << right << "\" y2=\"" << py
       << "\" stroke=\"gray\" stroke-width=\"1\"/>\n";
  }

  static constexpr const char* dashes[] = {"", "8,5", "2,4"};
  static constexpr const char* colors[] = {"#1f4e9c", "#b2331f", "#2c7a2c", "#7a2c7a"};
  const bool markers_only = d.rows.size() == 1;
  for (std::size_t c = 1; c < d.columns.size(); ++c) {
    const char* color = colors[(c - 1) % 4];
    const char* dash = dashes[(c - 1) % 3];
    if (markers_only) {
      const auto& row = d.rows.front();
      if (usable(row[0]) && usable(row[c]))
        os << "<circle cx=\"" << mx(row[0]) << "\" cy=\"" << my(row[c]) << "\" r=\"4\" fill=\"" << color << "\"/>\n";
    } else {
      std::ostringstream path;
      bool pen_down = false;
      for (const auto& row : d.rows) {
        if (!usable(row[0]) || !usable(row[c])) {
          pen_down = false;
          continue;
        }
        path << (pen_down ? " L" : " M") << mx(row[0]) << ',' << my(row[c]);
        pen_down = true;
      }
      os << "<path d=\"" << path.str() << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.6\"";
      if (*dash) os << " stroke-dasharray=\"" << dash << '"';
      os << "/>\n";
    }
    const double ly = top + 16.0 * static_cast<double>(c);
    os << "<line x1=\"" << right - 150 << "\" y1=\"" << ly << "\" x2=\"" << right - 120 << "\" y2=\"" << ly
       << "\" stroke=\"" << color << "\" stroke-width=\"1.6\"";
    if (*dash) os << " stroke-dasharray=\"" << dash << '"';
    os << "/>\n<text x=\"" << right - 114 << "\" y=\"" << ly + 4 << "\">" << d.columns[c] << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

inline void emit_plot(const Dataset& d, const std::string& path, const PlotOptions& opt) {
  const std::string svg = render_svg(d, opt);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot open '" + path + "' for writing");
  out << svg;
  out.flush();
  if (!out) throw Error(ErrorCode::Io, "write to '" + path + "' failed");
}

}  // namespace qbo::io
