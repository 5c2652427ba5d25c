#pragma once

#include <string>
#include <vector>

namespace funscreen {

// One line series of an SVG chart. NaN entries in y break the polyline into
// separate segments. The dash pattern feeds stroke-dasharray: "" draws solid,
// "8,4" dashed, "2,3" dotted; the legend spells the style out in words so the
// distinction survives grayscale or text-only inspection.
struct SvgSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    std::string dash;   // stroke-dasharray value, empty = solid
    std::string color;  // stroke color, assigned from a palette when empty
};

// Writes a standalone SVG line chart. The full numeric data is embedded in an
// XML comment as per-series tables, so the plot can be regenerated without
// the original run. Never throws: returns false when the file cannot be
// written, since plotting must not gate a batch run.
bool write_svg_chart(const std::string& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<SvgSeries>& series);

}  // namespace funscreen
