#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "corvec/dataset.hpp"
#include "corvec/errors.hpp"
#include "corvec/tensor.hpp"

namespace corvec {

namespace detail {

// coordinates rounded to 0.01 px: short, stable text regardless of platform
inline std::string svg_num(double v) {
    double r = std::round(v * 100.0) / 100.0;
    if (r == 0.0) r = 0.0;  // fold -0 into 0
    return format_double(r);
}

struct PlotScale {
    double lo_x = 0.0, hi_x = 1.0, lo_y = 0.0, hi_y = 1.0;
    double width = 640.0, height = 480.0, margin = 54.0;

    double x(double v) const {
        return margin + (v - lo_x) / (hi_x - lo_x) * (width - 2.0 * margin);
    }
    double y(double v) const {
        return height - margin - (v - lo_y) / (hi_y - lo_y) * (height - 2.0 * margin);
    }
};

inline void grow_bounds(const Tensor& X, double& lo_x, double& hi_x, double& lo_y,
                        double& hi_y) {
    for (std::size_t r = 0; r < X.rows; ++r) {
        lo_x = std::min(lo_x, X.at(r, 0));
        hi_x = std::max(hi_x, X.at(r, 0));
        lo_y = std::min(lo_y, X.at(r, 1));
        hi_y = std::max(hi_y, X.at(r, 1));
    }
}

inline void svg_markers(std::string& out, const Tensor& X, const std::vector<int>& s,
                        const PlotScale& sc, const char* color) {
    for (std::size_t r = 0; r < X.rows; ++r) {
        std::string cx = svg_num(sc.x(X.at(r, 0)));
        std::string cy = svg_num(sc.y(X.at(r, 1)));
        if (s[r] == 0) {
            out += "  <circle cx=\"" + cx + "\" cy=\"" + cy + "\" r=\"4\" fill=\"" +
                   color + "\" fill-opacity=\"0.65\"/>\n";
        } else {
            out += "  <rect x=\"" + svg_num(sc.x(X.at(r, 0)) - 4.0) + "\" y=\"" +
                   svg_num(sc.y(X.at(r, 1)) - 4.0) +
                   "\" width=\"8\" height=\"8\" fill=\"" + color +
                   "\" fill-opacity=\"0.65\"/>\n";
        }
    }
}

}  // namespace detail

/// Scatter of original vs corrected 2-D points: circles for group 0, squares
/// for group 1; blue originals, red corrected. Byte output is a pure function
/// of the inputs.
inline std::string render_direction_plot(const Tensor& X_before, const Tensor& X_after,
                                         const std::vector<int>& s) {
    if (X_before.cols != 2 || X_after.cols != 2)
        throw ConfigError("render_direction_plot: needs 2-D features, got " +
                          std::to_string(X_before.cols) + " and " +
                          std::to_string(X_after.cols) + " columns");
    if (X_before.rows != X_after.rows || s.size() != X_before.rows)
        throw StructuralError("render_direction_plot: row/group count mismatch");

    detail::PlotScale sc;
    if (X_before.rows > 0) {
        double lo_x = X_before.at(0, 0), hi_x = lo_x;
        double lo_y = X_before.at(0, 1), hi_y = lo_y;
        detail::grow_bounds(X_before, lo_x, hi_x, lo_y, hi_y);
        detail::grow_bounds(X_after, lo_x, hi_x, lo_y, hi_y);
        double pad_x = hi_x > lo_x ? 0.05 * (hi_x - lo_x) : 0.5;
        double pad_y = hi_y > lo_y ? 0.05 * (hi_y - lo_y) : 0.5;
        sc.lo_x = lo_x - pad_x;
        sc.hi_x = hi_x + pad_x;
        sc.lo_y = lo_y - pad_y;
        sc.hi_y = hi_y + pad_y;
    }

    std::string out;
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"640\" "
           "height=\"480\" viewBox=\"0 0 640 480\">\n";
    std::string x0 = detail::svg_num(sc.margin);
    std::string x1 = detail::svg_num(sc.width - sc.margin);
    std::string y0 = detail::svg_num(sc.height - sc.margin);
    std::string y1 = detail::svg_num(sc.margin);
    out += "  <line x1=\"" + x0 + "\" y1=\"" + y0 + "\" x2=\"" + x1 + "\" y2=\"" + y0 +
           "\" stroke=\"#444444\" stroke-width=\"1\"/>\n";
    out += "  <line x1=\"" + x0 + "\" y1=\"" + y0 + "\" x2=\"" + x0 + "\" y2=\"" + y1 +
           "\" stroke=\"#444444\" stroke-width=\"1\"/>\n";
    out += "  <text x=\"" + x0 + "\" y=\"" + detail::svg_num(sc.height - sc.margin + 18.0) +
           "\" font-size=\"11\" fill=\"#444444\">" + detail::svg_num(sc.lo_x) + "</text>\n";
    out += "  <text x=\"" + x1 + "\" y=\"" + detail::svg_num(sc.height - sc.margin + 18.0) +
           "\" font-size=\"11\" fill=\"#444444\" text-anchor=\"end\">" +
           detail::svg_num(sc.hi_x) + "</text>\n";
    out += "  <text x=\"" + detail::svg_num(sc.margin - 6.0) + "\" y=\"" + y0 +
           "\" font-size=\"11\" fill=\"#444444\" text-anchor=\"end\">" +
           detail::svg_num(sc.lo_y) + "</text>\n";
    out += "  <text x=\"" + detail::svg_num(sc.margin - 6.0) + "\" y=\"" + y1 +
           "\" font-size=\"11\" fill=\"#444444\" text-anchor=\"end\">" +
           detail::svg_num(sc.hi_y) + "</text>\n";
    out += "  <text x=\"" + x0 + "\" y=\"" + detail::svg_num(sc.margin - 34.0) +
           "\" font-size=\"12\" fill=\"#1f77b4\">original (blue)  circle: group 0, "
           "square: group 1</text>\n";
    out += "  <text x=\"" + x0 + "\" y=\"" + detail::svg_num(sc.margin - 20.0) +
           "\" font-size=\"12\" fill=\"#d62728\">corrected (red)</text>\n";
    detail::svg_markers(out, X_before, s, sc, "#1f77b4");
    detail::svg_markers(out, X_after, s, sc, "#d62728");
    out += "</svg>\n";
    return out;
}

inline void emit_direction_plot(const Tensor& X_before, const Tensor& X_after,
                                const std::vector<int>& s, const std::string& path) {
    std::string svg = render_direction_plot(X_before, X_after, s);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IngestError("cannot write '" + path + "'");
    out << svg;
}

}  // namespace corvec
