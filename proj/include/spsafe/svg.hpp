#pragma once

#include <string>
#include <vector>

namespace spsafe {

struct SvgSeries {
  std::vector<double> x;
  std::vector<double> y;
  std::string label;
  std::string color;      // CSS color; empty picks from the default palette
  bool dash_dot = false;  // violating-run styling
  bool dashed = false;    // reference-overlay styling
  bool markers = false;   // draw a dot at every sample
};

struct SvgStyle {
  int width = 760;
  int height = 480;
  std::string title;
  std::string x_label;
  std::string y_label;
  bool zero_line = true;  // horizontal rule at y = 0 when in range
  bool legend = true;
};

/// Interpolates green (t=0) to red (t=1), for coloring a family of runs by
/// increasing timescale ratio.
std::string ramp_color(double t);

/// Deterministic, self-contained SVG document: fixed input gives identical
/// bytes. Throws DomainError when no series or no finite points are given.
std::string render_svg(const std::vector<SvgSeries>& series,
                       const SvgStyle& style);

void render_svg(const std::string& path, const std::vector<SvgSeries>& series,
                const SvgStyle& style);

}  // namespace spsafe
