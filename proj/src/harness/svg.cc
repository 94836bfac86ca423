#include "losspred/harness/svg.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace losspred::harness {
namespace {

constexpr double kWidth = 640, kHeight = 440;
constexpr double kLeft = 70, kRight = 170, kTop = 40, kBottom = 60;
const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                               "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fixed(double v, int digits = 2) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", std::abs(v) < 1e-12 ? 0.0 : v);
  return buf;
}

}  // namespace

std::string scatter_svg(const std::string& title, const std::string& x_label,
                        const std::string& y_label, const std::vector<Series>& series) {
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : series) {
    for (double v : s.x) x0 = std::min(x0, v), x1 = std::max(x1, v);
    for (double v : s.y) y0 = std::min(y0, v), y1 = std::max(y1, v);
  }
  if (!(x0 <= x1)) x0 = 0, x1 = 1;
  if (!(y0 <= y1)) y0 = 0, y1 = 1;
  if (x1 - x0 < 1e-12) x0 -= 0.5, x1 += 0.5;
  if (y1 - y0 < 1e-12) y0 -= 0.5, y1 += 0.5;
  const double px = 0.05 * (x1 - x0), py = 0.05 * (y1 - y0);
  x0 -= px, x1 += px, y0 -= py, y1 += py;
  const double plot_w = kWidth - kLeft - kRight, plot_h = kHeight - kTop - kBottom;
  auto sx = [&](double v) { return kLeft + (v - x0) / (x1 - x0) * plot_w; };
  auto sy = [&](double v) { return kTop + (y1 - v) / (y1 - y0) * plot_h; };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
      << escape(title) << "</text>\n";
  out << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << plot_w
      << "\" height=\"" << plot_h << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = x0 + (x1 - x0) * k / 4.0;
    const double yv = y0 + (y1 - y0) * k / 4.0;
    out << "<line x1=\"" << fixed(sx(xv)) << "\" y1=\"" << kTop + plot_h << "\" x2=\""
        << fixed(sx(xv)) << "\" y2=\"" << kTop + plot_h + 5 << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << fixed(sx(xv)) << "\" y=\"" << kTop + plot_h + 18
        << "\" text-anchor=\"middle\">" << tick_label(xv) << "</text>\n";
    out << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << fixed(sy(yv)) << "\" x2=\"" << kLeft
        << "\" y2=\"" << fixed(sy(yv)) << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << kLeft - 8 << "\" y=\"" << fixed(sy(yv) + 4)
        << "\" text-anchor=\"end\">" << tick_label(yv) << "</text>\n";
  }
  if (y0 < 0 && y1 > 0) {
    out << "<line x1=\"" << kLeft << "\" y1=\"" << fixed(sy(0)) << "\" x2=\"" << kLeft + plot_w
        << "\" y2=\"" << fixed(sy(0)) << "\" stroke=\"#bbbbbb\" stroke-dasharray=\"4 3\"/>\n";
  }
  out << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 15
      << "\" text-anchor=\"middle\">" << escape(x_label) << "</text>\n";
  out << "<text transform=\"translate(18," << kTop + plot_h / 2
      << ") rotate(-90)\" text-anchor=\"middle\">" << escape(y_label) << "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kColors[s % (sizeof(kColors) / sizeof(kColors[0]))];
    const auto& ser = series[s];
    if (ser.lines && ser.x.size() > 1) {
      out << "<polyline fill=\"none\" stroke=\"" << color << "\" points=\"";
      for (std::size_t i = 0; i < ser.x.size(); ++i) {
        out << (i ? " " : "") << fixed(sx(ser.x[i])) << "," << fixed(sy(ser.y[i]));
      }
      out << "\"/>\n";
    }
    for (std::size_t i = 0; i < ser.x.size(); ++i) {
      out << "<circle cx=\"" << fixed(sx(ser.x[i])) << "\" cy=\"" << fixed(sy(ser.y[i]))
          << "\" r=\"3.5\" fill=\"" << color << "\" fill-opacity=\"0.8\"/>\n";
    }
    const double ly = kTop + 10 + 18.0 * static_cast<double>(s);
    out << "<circle cx=\"" << kWidth - kRight + 15 << "\" cy=\"" << ly << "\" r=\"4\" fill=\""
        << color << "\"/>\n";
    out << "<text x=\"" << kWidth - kRight + 25 << "\" y=\"" << ly + 4 << "\">"
        << escape(ser.name) << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace losspred::harness
