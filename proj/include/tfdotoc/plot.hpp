#pragma once

// Minimal self-contained SVG line plots.

#include <string>
#include <vector>

namespace tfdotoc {

enum class LineStyle { solid, dashed, dotted };

struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> band;  // 1-sigma half width; empty for none
  std::string color;         // empty: next palette color
  LineStyle style = LineStyle::solid;
  bool markers = false;
};

struct Plot {
  std::string title;
  std::string xlabel;
  std::string ylabel;
  bool log_x = false;
  std::vector<PlotSeries> series;
};

/// NaN points break the line; infinite x values are dropped.
std::string render_svg(const Plot& plot);
void write_svg(const std::string& path, const Plot& plot);

}  // namespace tfdotoc
