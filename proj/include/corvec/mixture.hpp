#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "corvec/errors.hpp"
#include "corvec/tensor.hpp"

namespace corvec {

namespace detail {

// neighbor order of row q: ascending Euclidean distance, ties by lower index,
// query excluded
inline std::vector<std::size_t> neighbor_order(const Tensor& X, std::size_t q) {
    std::vector<std::size_t> idx;
    idx.reserve(X.rows - 1);
    for (std::size_t i = 0; i < X.rows; ++i)
        if (i != q) idx.push_back(i);
    std::vector<double> d2(X.rows, 0.0);
    for (std::size_t i = 0; i < X.rows; ++i) {
        double acc = 0.0;
        for (std::size_t c = 0; c < X.cols; ++c) {
            double d = X.at(i, c) - X.at(q, c);
            acc += d * d;
        }
        d2[i] = acc;
    }
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (d2[a] != d2[b]) return d2[a] < d2[b];
        return a < b;
    });
    return idx;
}

}  // namespace detail

/// r_1..r_T in one pass: r_k is the average, over reference-group points, of
/// the share of their k nearest neighbors that belong to the same group.
inline std::vector<double> knn_mixture_curve(const Tensor& X, const std::vector<int>& s,
                                             std::size_t T, int reference_group = 0) {
    if (s.size() != X.rows) throw StructuralError("knn_mixture_curve: length mismatch");
    if (T < 1 || T > X.rows - 1)
        throw ConfigError("knn_mixture_curve: T = " + std::to_string(T) +
                          " out of range for " + std::to_string(X.rows) + " rows");
    std::vector<double> sums(T, 0.0);
    std::size_t refs = 0;
    for (std::size_t q = 0; q < X.rows; ++q) {
        if (s[q] != reference_group) continue;
        ++refs;
        std::vector<std::size_t> order = detail::neighbor_order(X, q);
        std::size_t same = 0;
        for (std::size_t k = 0; k < T; ++k) {
            if (s[order[k]] == reference_group) ++same;
            sums[k] += static_cast<double>(same) / static_cast<double>(k + 1);
        }
    }
    if (refs == 0) throw ConfigError("knn_mixture_curve: reference group absent");
    for (double& v : sums) v /= static_cast<double>(refs);
    return sums;
}

inline double knn_mixture_ratio(const Tensor& X, const std::vector<int>& s, std::size_t k,
                                int reference_group = 0) {
    return knn_mixture_curve(X, s, k, reference_group).back();
}

/// M = 1 - (1/(T r-hat)) sum_{k<=T} r_k. Zero when the curve sits at r-hat
/// (perfect mixing); negative when the reference group clusters with itself
/// (by the formula's own sign convention).
inline double mixture_metric_from_curve(const std::vector<double>& curve, double rhat) {
    if (curve.empty()) throw ConfigError("mixture_metric_from_curve: empty curve");
    if (!(rhat > 0.0)) throw ConfigError("mixture_metric_from_curve: rhat must be > 0");
    double sum = std::accumulate(curve.begin(), curve.end(), 0.0);
    return 1.0 - sum / (static_cast<double>(curve.size()) * rhat);
}

inline double knn_mixture_metric(const Tensor& X, const std::vector<int>& s, std::size_t T,
                                 int reference_group = 0) {
    std::vector<double> curve = knn_mixture_curve(X, s, T, reference_group);
    std::size_t refs = 0;
    for (int g : s)
        if (g == reference_group) ++refs;
    double rhat = static_cast<double>(refs) / static_cast<double>(s.size());
    return mixture_metric_from_curve(curve, rhat);
}

}  // namespace corvec
