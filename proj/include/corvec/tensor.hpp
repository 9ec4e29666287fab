#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "corvec/errors.hpp"

namespace corvec {

/// Dense row-major 2-D matrix of doubles with an optional gradient slot.
/// The unit of all numerics in the library.
struct Tensor {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> v;
    std::vector<double> grad;  // empty or same size as v

    Tensor() = default;
    Tensor(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), v(r * c, fill) {}

    static Tensor zeros(std::size_t r, std::size_t c) { return Tensor(r, c, 0.0); }

    template <typename Rows>
    static Tensor from_rows(const Rows& data) {
        Tensor t;
        t.rows = data.size();
        t.cols = t.rows ? data.begin()->size() : 0;
        t.v.reserve(t.rows * t.cols);
        for (const auto& row : data) {
            if (row.size() != t.cols)
                throw StructuralError("Tensor::from_rows: ragged rows");
            t.v.insert(t.v.end(), row.begin(), row.end());
        }
        return t;
    }

    static Tensor from_rows(std::initializer_list<std::initializer_list<double>> data) {
        return from_rows<std::initializer_list<std::initializer_list<double>>>(data);
    }

    static Tensor row_vector(const std::vector<double>& data) {
        Tensor t(1, data.size());
        t.v = data;
        return t;
    }

    static Tensor col_vector(const std::vector<double>& data) {
        Tensor t(data.size(), 1);
        t.v = data;
        return t;
    }

    std::size_t size() const { return rows * cols; }

    double& at(std::size_t r, std::size_t c) { return v[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return v[r * cols + c]; }

    bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }

    bool all_finite() const {
        for (double x : v)
            if (!std::isfinite(x)) return false;
        return true;
    }

    void ensure_grad() {
        if (grad.size() != v.size()) grad.assign(v.size(), 0.0);
    }

    std::string shape_str() const {
        return std::to_string(rows) + "x" + std::to_string(cols);
    }
};

}  // namespace corvec
