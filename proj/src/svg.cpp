#include "qfc/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "qfc/hilbert.hpp"

namespace qfc::svg {

namespace {

constexpr int kWidth = 720;
constexpr int kHeight = 440;
constexpr int kMarginLeft = 70;
constexpr int kMarginRight = 24;
constexpr int kMarginTop = 40;
constexpr int kMarginBottom = 56;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string num(double v) {
    std::ostringstream ss;
    ss.precision(6);
    ss << v;
    return ss.str();
}

}  // namespace

void write_line_chart(const std::string& path, const std::string& title,
                      const std::string& xlabel, const std::string& ylabel,
                      const std::vector<Series>& series) {
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const auto& s : series) {
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            if (std::isnan(s.x[i]) || std::isnan(s.y[i])) continue;
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, s.y[i]);
            ymax = std::max(ymax, s.y[i]);
        }
    }
    if (!(xmin < xmax)) { xmin -= 0.5; xmax = xmin + 1.0; }
    if (!(ymin < ymax)) { ymin -= 0.5; ymax = ymin + 1.0; }
    const double ypad = 0.05 * (ymax - ymin);
    ymin -= ypad;
    ymax += ypad;

    const double plot_w = kWidth - kMarginLeft - kMarginRight;
    const double plot_h = kHeight - kMarginTop - kMarginBottom;
    auto px = [&](double x) { return kMarginLeft + (x - xmin) / (xmax - xmin) * plot_w; };
    auto py = [&](double y) { return kMarginTop + (ymax - y) / (ymax - ymin) * plot_h; };

    std::ofstream f(path);
    if (!f) throw ValidationError("cannot open for writing: " + path);
    f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
    f << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    f << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"15\">" << title << "</text>\n";

    // Frame and ticks.
    f << "<rect x=\"" << kMarginLeft << "\" y=\"" << kMarginTop << "\" width=\"" << plot_w
      << "\" height=\"" << plot_h << "\" fill=\"none\" stroke=\"#333\"/>\n";
    const int n_ticks = 5;
    for (int k = 0; k <= n_ticks; ++k) {
        const double xv = xmin + (xmax - xmin) * k / n_ticks;
        const double yv = ymin + (ymax - ymin) * k / n_ticks;
        f << "<line x1=\"" << num(px(xv)) << "\" y1=\"" << kMarginTop + plot_h << "\" x2=\""
          << num(px(xv)) << "\" y2=\"" << kMarginTop + plot_h + 5 << "\" stroke=\"#333\"/>\n";
        f << "<text x=\"" << num(px(xv)) << "\" y=\"" << kMarginTop + plot_h + 20
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << num(xv)
          << "</text>\n";
        f << "<line x1=\"" << kMarginLeft - 5 << "\" y1=\"" << num(py(yv)) << "\" x2=\""
          << kMarginLeft << "\" y2=\"" << num(py(yv)) << "\" stroke=\"#333\"/>\n";
        f << "<text x=\"" << kMarginLeft - 8 << "\" y=\"" << num(py(yv) + 4)
          << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << num(yv)
          << "</text>\n";
    }
    f << "<text x=\"" << kMarginLeft + plot_w / 2 << "\" y=\"" << kHeight - 14
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << xlabel
      << "</text>\n";
    f << "<text x=\"18\" y=\"" << kMarginTop + plot_h / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
      << "transform=\"rotate(-90 18 " << kMarginTop + plot_h / 2 << ")\">" << ylabel
      << "</text>\n";

    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = kPalette[s % (sizeof(kPalette) / sizeof(kPalette[0]))];
        f << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.4\" points=\"";
        bool pen_down = false;
        for (std::size_t i = 0; i < series[s].x.size() && i < series[s].y.size(); ++i) {
            if (std::isnan(series[s].x[i]) || std::isnan(series[s].y[i])) {
                if (pen_down) {
                    f << "\"/>\n<polyline fill=\"none\" stroke=\"" << color
                      << "\" stroke-width=\"1.4\" points=\"";
                    pen_down = false;
                }
                continue;
            }
            f << num(px(series[s].x[i])) << ',' << num(py(series[s].y[i])) << ' ';
            pen_down = true;
        }
        f << "\"/>\n";
        f << "<text x=\"" << kMarginLeft + plot_w - 6 << "\" y=\""
          << kMarginTop + 16 + 16 * static_cast<int>(s)
          << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\" fill=\"" << color
          << "\">" << series[s].name << "</text>\n";
    }
    f << "</svg>\n";
}

}  // namespace qfc::svg
