#pragma once

#include <array>
#include <cstdint>

#include "corvec/dataset.hpp"
#include "corvec/rng.hpp"

namespace corvec {

/// Two isotropic Gaussian clouds, one per group; the target is group
/// membership so a classifier on the raw features recovers the group.
inline Dataset synth_two_gaussians(std::size_t n_per_group,
                                   std::array<double, 2> mu0 = {0.0, 0.0},
                                   std::array<double, 2> mu1 = {1.0, 1.0},
                                   double sigma = 1.0, std::uint64_t seed = 0) {
    if (n_per_group < 1) throw ConfigError("synth_two_gaussians: n_per_group < 1");
    Rng rng(seed);
    Dataset ds;
    ds.features = {{"x1", NormKind::Standard, true}, {"x2", NormKind::Standard, true}};
    ds.sensitive_name = "s";
    ds.target_name = "y";
    ds.X = Tensor(2 * n_per_group, 2);
    for (int g = 0; g < 2; ++g) {
        const std::array<double, 2>& mu = g == 0 ? mu0 : mu1;
        for (std::size_t i = 0; i < n_per_group; ++i) {
            std::size_t r = static_cast<std::size_t>(g) * n_per_group + i;
            ds.X.at(r, 0) = mu[0] + sigma * rng.normal();
            ds.X.at(r, 1) = mu[1] + sigma * rng.normal();
            ds.s.push_back(g);
            ds.y.push_back(static_cast<double>(g));
        }
    }
    return ds;
}

}  // namespace corvec
