#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "corvec/tensor.hpp"

namespace corvec {

struct GradCheckResult {
    double max_rel_err = 0.0;
    std::string worst;
};

/// Central-difference check of analytic gradients. `loss` recomputes the
/// scalar loss from the current contents of the parameter tensors; `analytic`
/// holds the gradients at the unperturbed point, aligned with `params`.
template <typename LossFn>
GradCheckResult finite_difference_check(LossFn loss, const std::vector<Tensor*>& params,
                                        const std::vector<std::vector<double>>& analytic,
                                        double eps = 1e-5) {
    GradCheckResult res;
    for (std::size_t p = 0; p < params.size(); ++p) {
        Tensor& t = *params[p];
        for (std::size_t j = 0; j < t.size(); ++j) {
            double saved = t.v[j];
            t.v[j] = saved + eps;
            double f1 = loss();
            t.v[j] = saved - eps;
            double f2 = loss();
            t.v[j] = saved;
            double fd = (f1 - f2) / (2.0 * eps);
            double a = analytic[p][j];
            double rel = std::abs(a - fd) / std::max(1.0, std::abs(a));
            if (rel > res.max_rel_err) {
                res.max_rel_err = rel;
                res.worst = "param " + std::to_string(p) + "[" + std::to_string(j) +
                            "]: analytic=" + std::to_string(a) +
                            " fd=" + std::to_string(fd);
            }
        }
    }
    return res;
}

}  // namespace corvec
