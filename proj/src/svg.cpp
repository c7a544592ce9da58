#include "sentry/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace sentry {

namespace {

constexpr double kWidth = 720, kHeight = 440;
constexpr double kLeft = 70, kRight = 30, kTop = 50, kBottom = 60;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                          "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '&') out += "&amp;";
        else if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else out += c;
    }
    return out;
}

// round tick spacing to 1/2/5 * 10^k
double nice_step(double span) {
    if (span <= 0.0) return 1.0;
    const double raw = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double frac = raw / mag;
    if (frac < 1.5) return mag;
    if (frac < 3.5) return 2.0 * mag;
    if (frac < 7.5) return 5.0 * mag;
    return 10.0 * mag;
}

}  // namespace

void write_line_chart_svg(const std::string& path, const std::string& title,
                          const std::string& x_label, const std::string& y_label,
                          const std::vector<SvgSeries>& series) {
    if (series.empty()) throw std::invalid_argument("svg: no series to plot");
    double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    bool first = true;
    for (const auto& s : series) {
        if (s.x.size() != s.y.size())
            throw std::invalid_argument("svg: series '" + s.label + "' has ragged x/y");
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (first) {
                xmin = xmax = s.x[i];
                ymin = ymax = s.y[i];
                first = false;
            }
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, s.y[i]);
            ymax = std::max(ymax, s.y[i]);
        }
    }
    if (xmax == xmin) xmax = xmin + 1.0;
    if (ymax == ymin) ymax = ymin + 1.0;
    const double pw = kWidth - kLeft - kRight;
    const double ph = kHeight - kTop - kBottom;
    auto sx = [&](double x) { return kLeft + (x - xmin) / (xmax - xmin) * pw; };
    auto sy = [&](double y) { return kTop + ph - (y - ymin) / (ymax - ymin) * ph; };

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error(path + ": cannot open for writing");
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << kWidth / 2 << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\""
        << " text-anchor=\"middle\">" << escape(title) << "</text>\n";

    // axes
    out << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + ph << "\" x2=\"" << kLeft + pw
        << "\" y2=\"" << kTop + ph << "\" stroke=\"black\"/>\n"
        << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
        << kTop + ph << "\" stroke=\"black\"/>\n";

    const double xstep = nice_step(xmax - xmin);
    for (double t = std::ceil(xmin / xstep) * xstep; t <= xmax + 1e-9; t += xstep) {
        out << "<line x1=\"" << num(sx(t)) << "\" y1=\"" << kTop + ph << "\" x2=\"" << num(sx(t))
            << "\" y2=\"" << kTop + ph + 5 << "\" stroke=\"black\"/>\n"
            << "<text x=\"" << num(sx(t)) << "\" y=\"" << kTop + ph + 20
            << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">" << num(t)
            << "</text>\n";
    }
    const double ystep = nice_step(ymax - ymin);
    for (double t = std::ceil(ymin / ystep) * ystep; t <= ymax + 1e-9; t += ystep) {
        out << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << num(sy(t)) << "\" x2=\"" << kLeft
            << "\" y2=\"" << num(sy(t)) << "\" stroke=\"black\"/>\n"
            << "<text x=\"" << kLeft - 8 << "\" y=\"" << num(sy(t) + 4)
            << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">" << num(t)
            << "</text>\n";
    }
    out << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 14
        << "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">"
        << escape(x_label) << "</text>\n"
        << "<text x=\"18\" y=\"" << kTop + ph / 2
        << "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\""
        << " transform=\"rotate(-90 18 " << kTop + ph / 2 << ")\">" << escape(y_label)
        << "</text>\n";

    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = kPalette[s % (sizeof kPalette / sizeof kPalette[0])];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\" points=\"";
        for (std::size_t i = 0; i < series[s].x.size(); ++i) {
            if (i) out << ' ';
            out << num(sx(series[s].x[i])) << ',' << num(sy(series[s].y[i]));
        }
        out << "\"/>\n";
        const double ly = kTop + 14 + 16 * static_cast<double>(s);
        out << "<line x1=\"" << kLeft + pw - 130 << "\" y1=\"" << ly << "\" x2=\""
            << kLeft + pw - 110 << "\" y2=\"" << ly << "\" stroke=\"" << color
            << "\" stroke-width=\"2\"/>\n"
            << "<text x=\"" << kLeft + pw - 104 << "\" y=\"" << ly + 4
            << "\" font-family=\"sans-serif\" font-size=\"11\">" << escape(series[s].label)
            << "</text>\n";
    }
    out << "</svg>\n";
    if (!out) throw std::runtime_error(path + ": write failed");
}

}  // namespace sentry
