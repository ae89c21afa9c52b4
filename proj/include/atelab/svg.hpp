#pragma once

#include <string>
#include <vector>

namespace atelab {

// Minimal line plot: fixed 800x500 viewport, x ticks at multiples of pi/4
// over [0, 2pi), y ticks every 0.25 over [0, 1.05], exactly one polyline.
// Non-finite y values are skipped.  All numbers printed with %.6g, so output
// is byte-stable.
std::string render_curve_svg(const std::vector<double>& thetas,
                             const std::vector<double>& r_values,
                             const std::string& title);

}  // namespace atelab
