#pragma once

#include <string>
#include <vector>

namespace sentry {

struct SvgSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

// Minimal standalone SVG line chart: axes, ticks, one polyline per series,
// legend. No external assets; colors come from a fixed palette.
void write_line_chart_svg(const std::string& path, const std::string& title,
                          const std::string& x_label, const std::string& y_label,
                          const std::vector<SvgSeries>& series);

}  // namespace sentry
