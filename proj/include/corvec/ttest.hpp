#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "corvec/errors.hpp"

namespace corvec {

struct TTestResult {
    double t = 0.0;
    double p = 1.0;
    std::size_t dof = 0;
    bool degenerate = false;  // zero variance with a nonzero mean difference
};

/// Corrected resampled t-test for paired cross-validation scores. Folds share
/// training rows, so the naive paired-t variance is deflated; the correction
/// inflates it by (1/n + n_test/n_train) before forming the statistic.
inline TTestResult nb_corrected_ttest(const std::vector<double>& scores_a,
                                      const std::vector<double>& scores_b,
                                      std::size_t n_train, std::size_t n_test) {
    if (scores_a.size() != scores_b.size())
        throw StructuralError("nb_corrected_ttest: score lists differ in length");
    std::size_t n = scores_a.size();
    if (n < 2) throw ConfigError("nb_corrected_ttest: need at least 2 paired scores");
    if (n_train == 0 || n_test == 0)
        throw ConfigError("nb_corrected_ttest: split sizes must be positive");

    double mean = 0.0;
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) {
        d[i] = scores_a[i] - scores_b[i];
        mean += d[i];
    }
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : d) {
        double c = v - mean;
        var += c * c;
    }
    var /= static_cast<double>(n - 1);

    TTestResult res;
    res.dof = n - 1;
    if (var == 0.0) {
        if (mean == 0.0) return res;  // identical lists: t = 0, p = 1
        res.t = std::copysign(std::numeric_limits<double>::infinity(), mean);
        res.p = 0.0;
        res.degenerate = true;
        return res;
    }
    double mult = 1.0 / static_cast<double>(n) +
                  static_cast<double>(n_test) / static_cast<double>(n_train);
    res.t = mean / std::sqrt(var * mult);
    boost::math::students_t dist(static_cast<double>(res.dof));
    res.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(res.t)));
    return res;
}

}  // namespace corvec
