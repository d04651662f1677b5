#include "spsafe/svg.hpp"

#include "spsafe/core.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace spsafe {

namespace {

// Fixed two-decimal pixel coordinates keep the output bytes independent of
// the platform's printf locale.
std::string px(double v) {
  char buf[32];
  const auto res =
      std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, 2);
  return std::string(buf, res.ptr);
}

std::string tick_label(double v) {
  if (v == 0.0) return "0";  // avoids "-0"
  char buf[32];
  const auto res =
      std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 5);
  return std::string(buf, res.ptr);
}

const char* kPalette[] = {"#1f6fb2", "#c44e52", "#2a9d64", "#8172b3",
                          "#cc8963", "#56707f"};

}  // namespace

std::string ramp_color(double t) {
  t = std::clamp(t, 0.0, 1.0);
  const auto lerp = [t](int a, int b) {
    return static_cast<int>(std::lround(a + t * (b - a)));
  };
  // green #1a9641 to red #d7191c
  const int r = lerp(0x1a, 0xd7), g = lerp(0x96, 0x19), b = lerp(0x41, 0x1c);
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
  return buf;
}

std::string render_svg(const std::vector<SvgSeries>& series,
                       const SvgStyle& style) {
  if (series.empty()) throw DomainError("render_svg: no series given");

  double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
  double y_lo = x_lo, y_hi = -x_lo;
  for (const SvgSeries& s : series) {
    if (s.x.size() != s.y.size())
      throw ContractViolation("render_svg: series x/y length mismatch");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x_lo = std::min(x_lo, s.x[i]);
      x_hi = std::max(x_hi, s.x[i]);
      y_lo = std::min(y_lo, s.y[i]);
      y_hi = std::max(y_hi, s.y[i]);
    }
  }
  if (!(x_lo <= x_hi)) throw DomainError("render_svg: no finite points");

  const auto pad_range = [](double& lo, double& hi) {
    const double span = hi - lo;
    const double pad =
        span > 0 ? 0.05 * span : (std::abs(lo) > 0 ? 0.1 * std::abs(lo) : 0.5);
    lo -= pad;
    hi += pad;
  };
  pad_range(x_lo, x_hi);
  pad_range(y_lo, y_hi);

  const double ml = 64, mr = 16, mt = style.title.empty() ? 16 : 36, mb = 44;
  const double pw = style.width - ml - mr, ph = style.height - mt - mb;
  const auto sx = [&](double v) { return ml + (v - x_lo) / (x_hi - x_lo) * pw; };
  const auto sy = [&](double v) {
    return mt + ph - (v - y_lo) / (y_hi - y_lo) * ph;
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << style.width
      << "\" height=\"" << style.height << "\" viewBox=\"0 0 " << style.width
      << ' ' << style.height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  // frame + ticks
  svg << "<rect x=\"" << px(ml) << "\" y=\"" << px(mt) << "\" width=\""
      << px(pw) << "\" height=\"" << px(ph)
      << "\" fill=\"none\" stroke=\"#333333\"/>\n";
  const int n_ticks = 5;
  for (int i = 0; i < n_ticks; ++i) {
    const double fx = x_lo + (x_hi - x_lo) * i / (n_ticks - 1);
    const double fy = y_lo + (y_hi - y_lo) * i / (n_ticks - 1);
    const double gx = sx(fx), gy = sy(fy);
    svg << "<line x1=\"" << px(gx) << "\" y1=\"" << px(mt + ph) << "\" x2=\""
        << px(gx) << "\" y2=\"" << px(mt + ph + 5)
        << "\" stroke=\"#333333\"/>\n";
    svg << "<text x=\"" << px(gx) << "\" y=\"" << px(mt + ph + 18)
        << "\" font-family=\"sans-serif\" font-size=\"11\" "
           "text-anchor=\"middle\">"
        << tick_label(fx) << "</text>\n";
    svg << "<line x1=\"" << px(ml - 5) << "\" y1=\"" << px(gy) << "\" x2=\""
        << px(ml) << "\" y2=\"" << px(gy) << "\" stroke=\"#333333\"/>\n";
    svg << "<text x=\"" << px(ml - 8) << "\" y=\"" << px(gy + 4)
        << "\" font-family=\"sans-serif\" font-size=\"11\" "
           "text-anchor=\"end\">"
        << tick_label(fy) << "</text>\n";
  }

  if (style.zero_line && y_lo < 0.0 && y_hi > 0.0)
    svg << "<line x1=\"" << px(ml) << "\" y1=\"" << px(sy(0)) << "\" x2=\""
        << px(ml + pw) << "\" y2=\"" << px(sy(0))
        << "\" stroke=\"#999999\" stroke-dasharray=\"2 3\"/>\n";

  if (!style.title.empty())
    svg << "<text x=\"" << px(ml + pw / 2) << "\" y=\"22\" "
        << "font-family=\"sans-serif\" font-size=\"14\" "
           "text-anchor=\"middle\">"
        << style.title << "</text>\n";
  if (!style.x_label.empty())
    svg << "<text x=\"" << px(ml + pw / 2) << "\" y=\""
        << px(style.height - 8)
        << "\" font-family=\"sans-serif\" font-size=\"12\" "
           "text-anchor=\"middle\">"
        << style.x_label << "</text>\n";
  if (!style.y_label.empty())
    svg << "<text x=\"14\" y=\"" << px(mt + ph / 2)
        << "\" font-family=\"sans-serif\" font-size=\"12\" "
           "text-anchor=\"middle\" transform=\"rotate(-90 14 " << px(mt + ph / 2)
        << ")\">" << style.y_label << "</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const SvgSeries& s = series[si];
    const std::string color =
        s.color.empty() ? kPalette[si % (sizeof(kPalette) / sizeof(*kPalette))]
                        : s.color;
    std::string dash;
    if (s.dash_dot)
      dash = " stroke-dasharray=\"8 4 2 4\"";
    else if (s.dashed)
      dash = " stroke-dasharray=\"6 5\"";
    // non-finite samples split the polyline
    std::vector<std::string> pts;
    const auto flush = [&] {
      if (pts.size() == 1)
        svg << "<circle cx=\"" << pts[0].substr(0, pts[0].find(','))
            << "\" cy=\"" << pts[0].substr(pts[0].find(',') + 1)
            << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
      else if (pts.size() > 1) {
        svg << "<polyline fill=\"none\" stroke=\"" << color
            << "\" stroke-width=\"1.6\"" << dash << " points=\"";
        for (std::size_t i = 0; i < pts.size(); ++i) {
          if (i) svg << ' ';
          svg << pts[i];
        }
        svg << "\"/>\n";
      }
      pts.clear();
    };
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) {
        flush();
        continue;
      }
      pts.push_back(px(sx(s.x[i])) + ',' + px(sy(s.y[i])));
    }
    flush();
    if (s.markers)
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
        svg << "<circle cx=\"" << px(sx(s.x[i])) << "\" cy=\""
            << px(sy(s.y[i])) << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
      }
  }

  if (style.legend) {
    double ly = mt + 10;
    for (std::size_t si = 0; si < series.size(); ++si) {
      const SvgSeries& s = series[si];
      if (s.label.empty()) continue;
      const std::string color =
          s.color.empty()
              ? kPalette[si % (sizeof(kPalette) / sizeof(*kPalette))]
              : s.color;
      std::string dash;
      if (s.dash_dot)
        dash = " stroke-dasharray=\"8 4 2 4\"";
      else if (s.dashed)
        dash = " stroke-dasharray=\"6 5\"";
      const double lx = ml + pw - 150;
      svg << "<line x1=\"" << px(lx) << "\" y1=\"" << px(ly) << "\" x2=\""
          << px(lx + 26) << "\" y2=\"" << px(ly) << "\" stroke=\"" << color
          << "\" stroke-width=\"1.6\"" << dash << "/>\n";
      svg << "<text x=\"" << px(lx + 32) << "\" y=\"" << px(ly + 4)
          << "\" font-family=\"sans-serif\" font-size=\"11\">" << s.label
          << "</text>\n";
      ly += 16;
    }
  }

  svg << "</svg>\n";
  return svg.str();
}

void render_svg(const std::string& path, const std::vector<SvgSeries>& series,
                const SvgStyle& style) {
  const std::string doc = render_svg(series, style);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DomainError("cannot open SVG output: " + path);
  f << doc;
}

}  // namespace spsafe
