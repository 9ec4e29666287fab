#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "corvec/errors.hpp"
#include "corvec/rng.hpp"

namespace corvec {

struct FoldPlan {
    std::vector<std::vector<std::size_t>> internal_folds;
    std::vector<std::vector<std::size_t>> external_folds;
    std::uint64_t seed = 0;
};

namespace detail {

inline std::vector<std::vector<std::size_t>> partition(std::size_t n, std::size_t k,
                                                       Rng& rng) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    rng.shuffle(idx);
    std::vector<std::vector<std::size_t>> folds(k);
    std::size_t base = n / k, extra = n % k, pos = 0;
    for (std::size_t f = 0; f < k; ++f) {
        std::size_t sz = base + (f < extra ? 1 : 0);
        folds[f].assign(idx.begin() + pos, idx.begin() + pos + sz);
        pos += sz;
    }
    return folds;
}

}  // namespace detail

inline FoldPlan make_folds(std::size_t n, std::size_t internal, std::size_t external,
                           std::uint64_t seed) {
    if (internal < 2 || external < 2)
        throw ConfigError("make_folds: need at least 2 folds per split");
    if (n < internal || n < external || n < 6)
        throw ConfigError("make_folds: n = " + std::to_string(n) + " too small");
    FoldPlan plan;
    plan.seed = seed;
    Rng r_int(mix_seed(seed, 0));
    Rng r_ext(mix_seed(seed, 1));
    plan.internal_folds = detail::partition(n, internal, r_int);
    plan.external_folds = detail::partition(n, external, r_ext);
    return plan;
}

inline std::vector<std::size_t> fold_complement(
    const std::vector<std::vector<std::size_t>>& folds, std::size_t held_out) {
    std::vector<std::size_t> rest;
    for (std::size_t f = 0; f < folds.size(); ++f)
        if (f != held_out) rest.insert(rest.end(), folds[f].begin(), folds[f].end());
    return rest;
}

}  // namespace corvec
