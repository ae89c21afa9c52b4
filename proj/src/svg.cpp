#include "atelab/svg.hpp"

#include <cmath>

#include "atelab/format.hpp"

namespace atelab {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kWidth = 800.0, kHeight = 500.0;
constexpr double kLeft = 70.0, kRight = 770.0, kTop = 40.0, kBottom = 450.0;
constexpr double kXMax = 2.0 * kPi;
constexpr double kYMin = 0.0, kYMax = 1.05;

double map_x(double theta) { return kLeft + (kRight - kLeft) * theta / kXMax; }
double map_y(double r) {
  return kBottom - (kBottom - kTop) * (r - kYMin) / (kYMax - kYMin);
}

const char* x_tick_label(int eighth) {
  static const char* labels[] = {"0",     "pi/4",  "pi/2",  "3pi/4",
                                 "pi",    "5pi/4", "3pi/2", "7pi/4"};
  return labels[eighth];
}

}  // namespace

std::string render_curve_svg(const std::vector<double>& thetas,
                             const std::vector<double>& r_values,
                             const std::string& title) {
  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt_g6(kWidth) +
         "\" height=\"" + fmt_g6(kHeight) + "\" viewBox=\"0 0 " + fmt_g6(kWidth) +
         " " + fmt_g6(kHeight) + "\">\n";
  svg += "<rect width=\"" + fmt_g6(kWidth) + "\" height=\"" + fmt_g6(kHeight) +
         "\" fill=\"white\"/>\n";
  svg += "<text x=\"" + fmt_g6(kWidth / 2) +
         "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"16\">" + title + "</text>\n";

  // Axes.
  svg += "<line x1=\"" + fmt_g6(kLeft) + "\" y1=\"" + fmt_g6(kBottom) + "\" x2=\"" +
         fmt_g6(kRight) + "\" y2=\"" + fmt_g6(kBottom) +
         "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  svg += "<line x1=\"" + fmt_g6(kLeft) + "\" y1=\"" + fmt_g6(kTop) + "\" x2=\"" +
         fmt_g6(kLeft) + "\" y2=\"" + fmt_g6(kBottom) +
         "\" stroke=\"black\" stroke-width=\"1\"/>\n";

  // Ticks: theta at multiples of pi/4, r every 0.25.
  for (int k = 0; k < 8; ++k) {
    const double x = map_x(k * kPi / 4.0);
    svg += "<line x1=\"" + fmt_g6(x) + "\" y1=\"" + fmt_g6(kBottom) + "\" x2=\"" +
           fmt_g6(x) + "\" y2=\"" + fmt_g6(kBottom + 6.0) +
           "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    svg += "<text x=\"" + fmt_g6(x) + "\" y=\"" + fmt_g6(kBottom + 22.0) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" +
           x_tick_label(k) + "</text>\n";
  }
  for (int k = 0; k <= 4; ++k) {
    const double r = 0.25 * k;
    const double y = map_y(r);
    svg += "<line x1=\"" + fmt_g6(kLeft - 6.0) + "\" y1=\"" + fmt_g6(y) + "\" x2=\"" +
           fmt_g6(kLeft) + "\" y2=\"" + fmt_g6(y) +
           "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    svg += "<text x=\"" + fmt_g6(kLeft - 12.0) + "\" y=\"" + fmt_g6(y + 4.0) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">" +
           fmt_g6(r) + "</text>\n";
  }
  svg += "<text x=\"" + fmt_g6((kLeft + kRight) / 2) + "\" y=\"" +
         fmt_g6(kHeight - 10.0) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
         "theta</text>\n";
  svg += "<text x=\"18\" y=\"" + fmt_g6((kTop + kBottom) / 2) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
         "transform=\"rotate(-90 18 " + fmt_g6((kTop + kBottom) / 2) + ")\">"
         "R(theta, t)</text>\n";

  svg += "<polyline fill=\"none\" stroke=\"#1f6fb2\" stroke-width=\"2\" points=\"";
  bool first = true;
  for (std::size_t i = 0; i < thetas.size() && i < r_values.size(); ++i) {
    if (!std::isfinite(r_values[i])) continue;
    if (!first) svg += " ";
    first = false;
    svg += fmt_g6(map_x(thetas[i])) + "," + fmt_g6(map_y(r_values[i]));
  }
  svg += "\"/>\n</svg>\n";
  return svg;
}

}  // namespace atelab
