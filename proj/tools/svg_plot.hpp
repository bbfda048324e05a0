#pragma once

#include <string>
#include <vector>

#include "morl/types.hpp"

namespace morl::cli {

struct PlotSeries {
    std::string label;
    std::string color;
    std::vector<VectorReturn> points;
    bool as_line = false;
};

/// Scatter/line plot of 2-objective returns with the reference point annotated.
/// Returns the SVG document text.
std::string render_svg(const std::vector<PlotSeries>& series, const VectorReturn& reference_point,
                       const std::string& title, const std::string& annotation);

} // namespace morl::cli
