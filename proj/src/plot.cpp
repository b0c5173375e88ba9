#include "tfdotoc/plot.hpp"

#include "tfdotoc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace tfdotoc {

namespace {

constexpr double kWidth = 640, kHeight = 420;
constexpr double kLeft = 70, kRight = 170, kTop = 40, kBottom = 55;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

std::string escape(const std::string& s) {
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

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", std::abs(v) < 1e-12 ? 0.0 : v);
  return buf;
}

std::vector<double> nice_ticks(double lo, double hi) {
  const double span = hi - lo;
  const double raw = span / 5;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (m * mag >= raw) {
      step = m * mag;
      break;
    }
  }
  std::vector<double> ticks;
  for (double v = std::ceil(lo / step - 1e-9) * step; v <= hi + 1e-9 * step; v += step) ticks.push_back(v);
  return ticks;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (lo > hi) lo = 0, hi = 1;
    if (hi - lo < 1e-12) {
      lo -= 0.5;
      hi += 0.5;
    }
  }
};

}  // namespace

std::string render_svg(const Plot& plot) {
  Range xr, yr;
  auto fx = [&](double x) { return plot.log_x ? (x > 0 ? std::log10(x) : std::nan("")) : x; };
  for (const auto& s : plot.series) {
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(fx(s.x[i])) || !std::isfinite(s.y[i])) continue;
      xr.add(fx(s.x[i]));
      const double b = i < s.band.size() && std::isfinite(s.band[i]) ? s.band[i] : 0.0;
      yr.add(s.y[i] - b);
      yr.add(s.y[i] + b);
    }
  }
  xr.finish();
  yr.finish();
  const double pad = 0.05 * (yr.hi - yr.lo);
  yr.lo -= pad;
  yr.hi += pad;

  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (fx(x) - xr.lo) / (xr.hi - xr.lo) * pw; };
  auto py = [&](double y) { return kTop + (yr.hi - y) / (yr.hi - yr.lo) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
    << escape(plot.title) << "</text>\n";

  // Axes and ticks.
  o << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  if (plot.log_x) {
    for (double e = std::ceil(xr.lo - 1e-9); e <= xr.hi + 1e-9; e += 1) {
      const double x = kLeft + (e - xr.lo) / (xr.hi - xr.lo) * pw;
      o << "<line x1=\"" << num(x) << "\" y1=\"" << num(kTop + ph) << "\" x2=\"" << num(x) << "\" y2=\""
        << num(kTop + ph + 5) << "\" stroke=\"black\"/>\n";
      o << "<text x=\"" << num(x) << "\" y=\"" << num(kTop + ph + 18) << "\" text-anchor=\"middle\">"
        << tick_label(std::pow(10.0, e)) << "</text>\n";
    }
  } else {
    for (double v : nice_ticks(xr.lo, xr.hi)) {
      const double x = px(v);
      o << "<line x1=\"" << num(x) << "\" y1=\"" << num(kTop + ph) << "\" x2=\"" << num(x) << "\" y2=\""
        << num(kTop + ph + 5) << "\" stroke=\"black\"/>\n";
      o << "<text x=\"" << num(x) << "\" y=\"" << num(kTop + ph + 18) << "\" text-anchor=\"middle\">"
        << tick_label(v) << "</text>\n";
    }
  }
  for (double v : nice_ticks(yr.lo, yr.hi)) {
    const double y = py(v);
    o << "<line x1=\"" << num(kLeft - 5) << "\" y1=\"" << num(y) << "\" x2=\"" << num(kLeft) << "\" y2=\""
      << num(y) << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << num(kLeft - 8) << "\" y=\"" << num(y + 4) << "\" text-anchor=\"end\">" << tick_label(v)
      << "</text>\n";
  }
  o << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"" << num(kHeight - 12) << "\" text-anchor=\"middle\">"
    << escape(plot.xlabel) << "</text>\n";
  o << "<text transform=\"translate(18," << num(kTop + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
    << escape(plot.ylabel) << "</text>\n";

  o << "<clipPath id=\"area\"><rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\""
    << ph << "\"/></clipPath>\n<g clip-path=\"url(#area)\">\n";
  std::size_t palette = 0;
  std::vector<std::string> colors;
  for (const auto& s : plot.series) {
    const std::string color = s.color.empty() ? kPalette[palette++ % std::size(kPalette)] : s.color;
    colors.push_back(color);
    auto usable = [&](std::size_t i) { return std::isfinite(fx(s.x[i])) && std::isfinite(s.y[i]); };
    const std::size_t count = std::min(s.x.size(), s.y.size());

    // Bands are drawn per contiguous run of finite points.
    if (!s.band.empty()) {
      std::size_t i = 0;
      while (i < count) {
        while (i < count && !(usable(i) && i < s.band.size() && std::isfinite(s.band[i]))) ++i;
        std::size_t j = i;
        while (j < count && usable(j) && j < s.band.size() && std::isfinite(s.band[j])) ++j;
        if (j - i >= 2) {
          o << "<polygon fill=\"" << color << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
          for (std::size_t k = i; k < j; ++k) o << num(px(s.x[k])) << ',' << num(py(s.y[k] + s.band[k])) << ' ';
          for (std::size_t k = j; k-- > i;) o << num(px(s.x[k])) << ',' << num(py(s.y[k] - s.band[k])) << ' ';
          o << "\"/>\n";
        }
        i = j;
      }
    }
    const char* dash = s.style == LineStyle::dashed ? " stroke-dasharray=\"7,4\""
                       : s.style == LineStyle::dotted ? " stroke-dasharray=\"2,3\""
                                                      : "";
    std::size_t i = 0;
    while (i < count) {
      while (i < count && !usable(i)) ++i;
      std::size_t j = i;
      while (j < count && usable(j)) ++j;
      if (j > i) {
        o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.6\"" << dash << " points=\"";
        for (std::size_t k = i; k < j; ++k) o << num(px(s.x[k])) << ',' << num(py(s.y[k])) << ' ';
        o << "\"/>\n";
      }
      i = j;
    }
    if (s.markers) {
      for (std::size_t k = 0; k < count; ++k) {
        if (usable(k))
          o << "<circle cx=\"" << num(px(s.x[k])) << "\" cy=\"" << num(py(s.y[k])) << "\" r=\"3\" fill=\"" << color
            << "\"/>\n";
      }
    }
  }
  o << "</g>\n";

  // Legend to the right of the plot area.
  const double lx = kLeft + pw + 12;
  for (std::size_t k = 0; k < plot.series.size(); ++k) {
    const auto& s = plot.series[k];
    const double y = kTop + 10 + 18 * double(k);
    const char* dash = s.style == LineStyle::dashed ? " stroke-dasharray=\"7,4\""
                       : s.style == LineStyle::dotted ? " stroke-dasharray=\"2,3\""
                                                      : "";
    o << "<line x1=\"" << num(lx) << "\" y1=\"" << num(y) << "\" x2=\"" << num(lx + 24) << "\" y2=\"" << num(y)
      << "\" stroke=\"" << colors[k] << "\" stroke-width=\"1.6\"" << dash << "/>\n";
    o << "<text x=\"" << num(lx + 30) << "\" y=\"" << num(y + 4) << "\">" << escape(s.name) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

void write_svg(const std::string& path, const Plot& plot) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  out << render_svg(plot);
  if (!out) throw Error("write failed for '" + path + "'");
}

}  // namespace tfdotoc
