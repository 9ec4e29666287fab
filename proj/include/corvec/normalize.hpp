#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "corvec/errors.hpp"
#include "corvec/schema.hpp"
#include "corvec/tensor.hpp"

namespace corvec {

/// Per-feature affine normalization with an exact inverse. Standard scaling
/// stores (mean, population std); minmax stores (min, max). Degenerate
/// columns: std stored as 1, minmax maps everything to 0.
struct NormalizationSpec {
    struct Column {
        NormKind kind = NormKind::None;
        double a = 0.0;  // mean or min
        double b = 1.0;  // std or max
    };
    std::vector<Column> cols;

    std::size_t dim() const { return cols.size(); }
};

inline NormalizationSpec fit_normalizer(const Tensor& X,
                                        const std::vector<NormKind>& kinds) {
    if (X.rows == 0) throw StructuralError("fit_normalizer: empty matrix");
    if (kinds.size() != X.cols)
        throw StructuralError("fit_normalizer: " + std::to_string(kinds.size()) +
                              " kinds for " + std::to_string(X.cols) + " columns");
    NormalizationSpec spec;
    spec.cols.resize(X.cols);
    for (std::size_t c = 0; c < X.cols; ++c) {
        NormalizationSpec::Column& col = spec.cols[c];
        col.kind = kinds[c];
        if (kinds[c] == NormKind::Standard) {
            double mean = 0.0;
            for (std::size_t r = 0; r < X.rows; ++r) mean += X.at(r, c);
            mean /= static_cast<double>(X.rows);
            double var = 0.0;
            for (std::size_t r = 0; r < X.rows; ++r) {
                double d = X.at(r, c) - mean;
                var += d * d;
            }
            var /= static_cast<double>(X.rows);
            double sd = std::sqrt(var);
            col.a = mean;
            col.b = sd > 0.0 ? sd : 1.0;
        } else if (kinds[c] == NormKind::Minmax) {
            double lo = X.at(0, c), hi = X.at(0, c);
            for (std::size_t r = 1; r < X.rows; ++r) {
                lo = std::min(lo, X.at(r, c));
                hi = std::max(hi, X.at(r, c));
            }
            col.a = lo;
            col.b = hi;
        }
    }
    return spec;
}

inline double normalize_value(const NormalizationSpec::Column& c, double x) {
    switch (c.kind) {
        case NormKind::Standard: return (x - c.a) / c.b;
        case NormKind::Minmax: return c.b > c.a ? (x - c.a) / (c.b - c.a) : 0.0;
        default: return x;
    }
}

inline double denormalize_value(const NormalizationSpec::Column& c, double x) {
    switch (c.kind) {
        case NormKind::Standard: return x * c.b + c.a;
        case NormKind::Minmax: return c.b > c.a ? x * (c.b - c.a) + c.a : c.a;
        default: return x;
    }
}

// scale factor only; offsets cancel in differences of normalized values
inline double correction_scale(const NormalizationSpec::Column& c) {
    switch (c.kind) {
        case NormKind::Standard: return c.b;
        case NormKind::Minmax: return c.b - c.a;
        default: return 1.0;
    }
}

inline void check_dim(const NormalizationSpec& spec, const Tensor& X,
                      const char* where) {
    if (spec.dim() != X.cols)
        throw StructuralError(std::string(where) + ": spec has " +
                              std::to_string(spec.dim()) + " columns, matrix has " +
                              std::to_string(X.cols));
}

inline Tensor apply_normalization(const NormalizationSpec& spec, const Tensor& X) {
    check_dim(spec, X, "apply_normalization");
    Tensor out(X.rows, X.cols);
    for (std::size_t r = 0; r < X.rows; ++r)
        for (std::size_t c = 0; c < X.cols; ++c)
            out.at(r, c) = normalize_value(spec.cols[c], X.at(r, c));
    return out;
}

inline Tensor invert_normalization(const NormalizationSpec& spec, const Tensor& X) {
    check_dim(spec, X, "invert_normalization");
    Tensor out(X.rows, X.cols);
    for (std::size_t r = 0; r < X.rows; ++r)
        for (std::size_t c = 0; c < X.cols; ++c)
            out.at(r, c) = denormalize_value(spec.cols[c], X.at(r, c));
    return out;
}

/// Maps corrections from normalized to raw units. Corrections are differences
/// of normalized values, so only the scale factor applies, no offset.
inline Tensor invert_correction(const NormalizationSpec& spec, const Tensor& W) {
    check_dim(spec, W, "invert_correction");
    Tensor out(W.rows, W.cols);
    for (std::size_t r = 0; r < W.rows; ++r)
        for (std::size_t c = 0; c < W.cols; ++c)
            out.at(r, c) = W.at(r, c) * correction_scale(spec.cols[c]);
    return out;
}

inline NormalizationSpec subset_spec(const NormalizationSpec& spec,
                                     const std::vector<std::size_t>& cols) {
    NormalizationSpec out;
    for (std::size_t c : cols) {
        if (c >= spec.dim()) throw StructuralError("subset_spec: column out of range");
        out.cols.push_back(spec.cols[c]);
    }
    return out;
}

}  // namespace corvec
