#include "svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace morl::cli {

namespace {

constexpr double kWidth = 640, kHeight = 480;
constexpr double kMarginL = 64, kMarginR = 24, kMarginT = 40, kMarginB = 48;

std::string fmt(double v) {
    std::ostringstream ss;
    ss.precision(6);
    ss << v;
    return ss.str();
}

} // namespace

std::string render_svg(const std::vector<PlotSeries>& series, const VectorReturn& reference_point,
                       const std::string& title, const std::string& annotation) {
    double min_x = reference_point.size() == 2 ? reference_point[0] : 0.0;
    double min_y = reference_point.size() == 2 ? reference_point[1] : 0.0;
    double max_x = min_x + 1.0, max_y = min_y + 1.0;
    bool any = false;
    for (const auto& s : series) {
        for (const auto& p : s.points) {
            if (p.size() != 2) continue;
            min_x = std::min(min_x, p[0]);
            min_y = std::min(min_y, p[1]);
            max_x = std::max(max_x, p[0]);
            max_y = std::max(max_y, p[1]);
            any = true;
        }
    }
    const double span_x = std::max(max_x - min_x, 1e-9);
    const double span_y = std::max(max_y - min_y, 1e-9);
    auto sx = [&](double x) {
        return kMarginL + (x - min_x) / span_x * (kWidth - kMarginL - kMarginR);
    };
    auto sy = [&](double y) {
        return kHeight - kMarginB - (y - min_y) / span_y * (kHeight - kMarginT - kMarginB);
    };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
        << title << "</text>\n";

    // axes
    svg << "<line x1=\"" << kMarginL << "\" y1=\"" << kHeight - kMarginB << "\" x2=\""
        << kWidth - kMarginR << "\" y2=\"" << kHeight - kMarginB
        << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    svg << "<line x1=\"" << kMarginL << "\" y1=\"" << kMarginT << "\" x2=\"" << kMarginL
        << "\" y2=\"" << kHeight - kMarginB << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double fx = min_x + span_x * i / 4.0;
        const double fy = min_y + span_y * i / 4.0;
        svg << "<text x=\"" << sx(fx) << "\" y=\"" << kHeight - kMarginB + 18
            << "\" text-anchor=\"middle\" font-size=\"11\">" << fmt(fx) << "</text>\n";
        svg << "<text x=\"" << kMarginL - 8 << "\" y=\"" << sy(fy) + 4
            << "\" text-anchor=\"end\" font-size=\"11\">" << fmt(fy) << "</text>\n";
    }
    svg << "<text x=\"" << (kWidth + kMarginL - kMarginR) / 2 << "\" y=\"" << kHeight - 12
        << "\" text-anchor=\"middle\" font-size=\"12\">objective 1</text>\n";
    svg << "<text x=\"16\" y=\"" << (kHeight + kMarginT - kMarginB) / 2
        << "\" font-size=\"12\" transform=\"rotate(-90 16 "
        << (kHeight + kMarginT - kMarginB) / 2 << ")\">objective 2</text>\n";

    if (!any) {
        svg << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight / 2
            << "\" text-anchor=\"middle\" font-size=\"14\" fill=\"darkred\">"
            << "warning: no points to plot</text>\n";
    }

    double legend_y = kMarginT + 8;
    for (const auto& s : series) {
        if (s.as_line && s.points.size() > 1) {
            svg << "<polyline fill=\"none\" stroke=\"" << s.color
                << "\" stroke-width=\"1.5\" points=\"";
            auto sorted = s.points;
            std::sort(sorted.begin(), sorted.end());
            for (const auto& p : sorted) svg << sx(p[0]) << "," << sy(p[1]) << " ";
            svg << "\"/>\n";
        }
        for (const auto& p : s.points) {
            svg << "<circle cx=\"" << sx(p[0]) << "\" cy=\"" << sy(p[1])
                << "\" r=\"3\" fill=\"" << s.color << "\" fill-opacity=\"0.75\"/>\n";
        }
        svg << "<circle cx=\"" << kWidth - 170 << "\" cy=\"" << legend_y << "\" r=\"4\" fill=\""
            << s.color << "\"/>\n";
        svg << "<text x=\"" << kWidth - 160 << "\" y=\"" << legend_y + 4
            << "\" font-size=\"12\">" << s.label << "</text>\n";
        legend_y += 18;
    }

    // reference point marker and annotation
    if (reference_point.size() == 2) {
        svg << "<rect x=\"" << sx(reference_point[0]) - 4 << "\" y=\""
            << sy(reference_point[1]) - 4
            << "\" width=\"8\" height=\"8\" fill=\"black\"/>\n";
        svg << "<text x=\"" << sx(reference_point[0]) + 8 << "\" y=\""
            << sy(reference_point[1]) - 6 << "\" font-size=\"11\">r0=(" << fmt(reference_point[0])
            << ", " << fmt(reference_point[1]) << ")</text>\n";
    }
    svg << "<text x=\"" << kMarginL << "\" y=\"" << kMarginT - 6 << "\" font-size=\"10\" "
        << "fill=\"gray\">" << annotation << "</text>\n";
    svg << "</svg>\n";
    return svg.str();
}

} // namespace morl::cli
