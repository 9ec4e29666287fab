#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "corvec/dataset.hpp"
#include "corvec/errors.hpp"
#include "corvec/rng.hpp"

namespace corvec {

struct RankPair {
    std::size_t i, j;
    double dy;  // indicator of y_i >= y_j
};

/// Samples `budget` ordered pairs, within query groups when the dataset has
/// them, aiming for an even split between dy = 1 and dy = 0. When one class
/// is scarce (heavily tied targets) the other fills the remainder.
inline std::vector<RankPair> make_pairs(const Dataset& ds, std::size_t budget,
                                        std::uint64_t seed) {
    std::map<long, std::vector<std::size_t>> buckets;
    if (ds.query_ids.empty()) {
        for (std::size_t i = 0; i < ds.n(); ++i) buckets[0].push_back(i);
    } else {
        for (std::size_t i = 0; i < ds.n(); ++i) buckets[ds.query_ids[i]].push_back(i);
    }
    std::vector<const std::vector<std::size_t>*> usable;
    std::vector<std::size_t> pool;  // rows living in buckets with >= 2 rows
    std::map<std::size_t, const std::vector<std::size_t>*> bucket_of;
    for (auto& [q, rows] : buckets)
        if (rows.size() >= 2) {
            usable.push_back(&rows);
            for (std::size_t r : rows) {
                pool.push_back(r);
                bucket_of[r] = &rows;
            }
        }
    if (usable.empty())
        throw ConfigError("make_pairs: no query group holds two rows");

    Rng rng(seed);
    std::size_t want1 = (budget + 1) / 2, want0 = budget / 2;
    std::size_t got1 = 0, got0 = 0;
    std::vector<RankPair> pairs;
    pairs.reserve(budget);

    auto draw = [&]() -> RankPair {
        while (true) {
            std::size_t i = pool[rng.uniform_index(pool.size())];
            const std::vector<std::size_t>& rows = *bucket_of[i];
            std::size_t j = rows[rng.uniform_index(rows.size())];
            if (j == i) continue;
            return {i, j, ds.y[i] >= ds.y[j] ? 1.0 : 0.0};
        }
    };

    std::size_t attempts = 0, limit = 200 * budget + 1000;
    while (pairs.size() < budget && attempts < limit) {
        ++attempts;
        RankPair p = draw();
        if (p.dy == 1.0 && got1 < want1) {
            pairs.push_back(p);
            ++got1;
        } else if (p.dy == 0.0 && got0 < want0) {
            pairs.push_back(p);
            ++got0;
        }
    }
    while (pairs.size() < budget) pairs.push_back(draw());
    return pairs;
}

inline std::vector<RankPair> make_pairs(const Dataset& ds, std::uint64_t seed) {
    return make_pairs(ds, 20 * ds.n(), seed);
}

}  // namespace corvec
