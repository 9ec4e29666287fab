#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "corvec/errors.hpp"

namespace corvec {

struct RankedList {
    std::vector<std::size_t> order;  // item indices by descending score
    std::vector<double> relevance;   // indexed by item
    std::vector<int> group;          // indexed by item

    std::size_t n() const { return order.size(); }
};

/// Sorts by descending score with ties broken by lower original index.
inline RankedList make_ranked_list(const std::vector<double>& scores,
                                   const std::vector<double>& relevance,
                                   const std::vector<int>& group) {
    if (scores.size() != relevance.size() || scores.size() != group.size())
        throw StructuralError("make_ranked_list: length mismatch");
    for (double v : scores)
        if (std::isnan(v)) throw NumericError("make_ranked_list: NaN score");
    RankedList list;
    list.relevance = relevance;
    list.group = group;
    list.order.resize(scores.size());
    std::iota(list.order.begin(), list.order.end(), 0);
    std::stable_sort(list.order.begin(), list.order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    return list;
}

inline double ndcg_at_k(const RankedList& list, std::size_t k) {
    if (k < 1 || k > list.n())
        throw ConfigError("ndcg_at_k: k = " + std::to_string(k) + " out of range for " +
                          std::to_string(list.n()) + " items");
    for (double r : list.relevance)
        if (r < 0) throw ConfigError("ndcg_at_k: negative relevance");
    double dcg = 0.0;
    for (std::size_t i = 0; i < k; ++i)
        dcg += (std::pow(2.0, list.relevance[list.order[i]]) - 1.0) /
               std::log2(static_cast<double>(i) + 2.0);
    std::vector<double> ideal = list.relevance;
    std::sort(ideal.begin(), ideal.end(), std::greater<>());
    double idcg = 0.0;
    for (std::size_t i = 0; i < k; ++i)
        idcg += (std::pow(2.0, ideal[i]) - 1.0) / std::log2(static_cast<double>(i) + 2.0);
    if (idcg == 0.0) return 1.0;  // all-zero relevance lists count as ideal
    return dcg / idcg;
}

// cutoffs {10, 20, ...} up to N, always including N; below 10 just {N}
inline std::vector<std::size_t> rnd_cutoffs(std::size_t n) {
    std::vector<std::size_t> cuts;
    for (std::size_t i = 10; i < n; i += 10) cuts.push_back(i);
    cuts.push_back(n);
    return cuts;
}

namespace detail {

inline double rnd_sum(const std::vector<std::size_t>& protected_prefix_counts,
                      std::size_t n, double pop_ratio) {
    double acc = 0.0;
    for (std::size_t i : rnd_cutoffs(n)) {
        double prefix_ratio = static_cast<double>(protected_prefix_counts[i]) /
                              static_cast<double>(i);
        acc += std::abs(prefix_ratio - pop_ratio) / std::log2(static_cast<double>(i));
    }
    return acc;
}

}  // namespace detail

/// Normalized discounted difference between the protected share of each
/// top-i prefix and its share of the whole population. The normalizer is the
/// same sum on a dummy list holding every protected item at the bottom.
inline double rnd(const RankedList& list, int protected_group) {
    std::size_t n = list.n();
    if (n < 2) throw ConfigError("rnd: need at least 2 items");
    std::size_t p = 0;
    for (int g : list.group)
        if (g == protected_group) ++p;
    if (p == 0) throw ConfigError("rnd: protected group absent");
    double ratio = static_cast<double>(p) / static_cast<double>(n);

    std::vector<std::size_t> counts(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i)
        counts[i + 1] = counts[i] + (list.group[list.order[i]] == protected_group ? 1 : 0);
    double raw = detail::rnd_sum(counts, n, ratio);

    std::vector<std::size_t> dummy(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t at_end = i + 1 > n - p ? i + 1 - (n - p) : 0;
        dummy[i + 1] = at_end;
    }
    double z = detail::rnd_sum(dummy, n, ratio);
    if (z == 0.0) return 0.0;
    return raw / z;
}

struct GpaRankReport {
    // accuracy of the ranker on pairs (more relevant in first group,
    // less relevant in second group)
    std::map<std::pair<int, int>, double> direction_acc;
    std::optional<double> difference;  // absent when no group pair has both directions
};

inline GpaRankReport gpa_rank(const std::vector<double>& scores,
                              const std::vector<double>& relevance,
                              const std::vector<int>& group) {
    if (scores.size() != relevance.size() || scores.size() != group.size())
        throw StructuralError("gpa_rank: length mismatch");
    std::map<std::pair<int, int>, std::pair<double, std::size_t>> acc;  // credit, count
    std::size_t n = scores.size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (relevance[i] <= relevance[j]) continue;
            if (group[i] == group[j]) continue;
            double credit = scores[i] > scores[j] ? 1.0 : scores[i] == scores[j] ? 0.5 : 0.0;
            auto& slot = acc[{group[i], group[j]}];
            slot.first += credit;
            slot.second += 1;
        }
    GpaRankReport rep;
    for (auto& [dir, slot] : acc)
        rep.direction_acc[dir] = slot.first / static_cast<double>(slot.second);
    double best = -1.0;
    for (auto& [dir, a] : rep.direction_acc) {
        if (dir.first > dir.second) continue;
        auto rev = rep.direction_acc.find({dir.second, dir.first});
        if (rev == rep.direction_acc.end()) continue;
        best = std::max(best, std::abs(a - rev->second));
    }
    if (best >= 0.0) rep.difference = best;
    return rep;
}

/// Per-group accuracy gap of thresholded predictions; max over group pairs
/// when more than two groups are present.
inline double gpa_cls(const std::vector<double>& scores, const std::vector<double>& labels,
                      const std::vector<int>& group, double threshold) {
    if (scores.size() != labels.size() || scores.size() != group.size())
        throw StructuralError("gpa_cls: length mismatch");
    std::map<int, std::pair<std::size_t, std::size_t>> per_group;  // correct, total
    for (std::size_t i = 0; i < scores.size(); ++i) {
        double pred = scores[i] >= threshold ? 1.0 : 0.0;
        auto& slot = per_group[group[i]];
        if (pred == labels[i]) ++slot.first;
        ++slot.second;
    }
    if (per_group.size() < 2) throw ConfigError("gpa_cls: need at least two groups");
    std::vector<double> accs;
    for (auto& [g, slot] : per_group)
        accs.push_back(static_cast<double>(slot.first) / static_cast<double>(slot.second));
    double best = 0.0;
    for (std::size_t a = 0; a < accs.size(); ++a)
        for (std::size_t b = a + 1; b < accs.size(); ++b)
            best = std::max(best, std::abs(accs[a] - accs[b]));
    return best;
}

/// Statistical-parity gap: positive-classification rates of s = 1 vs s = 0
/// at one threshold.
inline double y_discrim(const std::vector<double>& scores, const std::vector<int>& group,
                        double threshold) {
    if (scores.size() != group.size()) throw StructuralError("y_discrim: length mismatch");
    double pos1 = 0, n1 = 0, pos0 = 0, n0 = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        double pred = scores[i] >= threshold ? 1.0 : 0.0;
        if (group[i] == 1) {
            pos1 += pred;
            n1 += 1;
        } else if (group[i] == 0) {
            pos0 += pred;
            n0 += 1;
        }
    }
    if (n0 == 0 || n1 == 0) throw ConfigError("y_discrim: need both group values");
    return std::abs(pos1 / n1 - pos0 / n0);
}

// 20 evenly spaced thresholds covering [0.05, 1)
inline std::vector<double> audc_thresholds() {
    std::vector<double> grid;
    for (int j = 0; j < 20; ++j) grid.push_back(0.05 + 0.0475 * j);
    return grid;
}

inline double audc(const std::vector<double>& scores, const std::vector<int>& group,
                   const std::vector<double>& thresholds = audc_thresholds()) {
    if (thresholds.empty()) throw ConfigError("audc: empty threshold grid");
    for (std::size_t i = 1; i < thresholds.size(); ++i)
        if (thresholds[i] <= thresholds[i - 1])
            throw ConfigError("audc: thresholds must be strictly increasing");
    double acc = 0.0;
    for (double t : thresholds) acc += y_discrim(scores, group, t);
    return acc / static_cast<double>(thresholds.size());
}

/// Mann-Whitney AUC via midranks; tied pairs earn half credit.
inline double auc(const std::vector<double>& scores, const std::vector<double>& labels) {
    if (scores.size() != labels.size()) throw StructuralError("auc: length mismatch");
    std::size_t npos = 0, nneg = 0;
    for (double y : labels) {
        if (y == 1.0)
            ++npos;
        else if (y == 0.0)
            ++nneg;
        else
            throw ConfigError("auc: labels must be 0 or 1");
    }
    if (npos == 0 || nneg == 0) throw ConfigError("auc: need both classes");
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    double rank_pos_sum = 0.0;
    std::size_t i = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
        double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k)
            if (labels[idx[k]] == 1.0) rank_pos_sum += midrank;
        i = j;
    }
    double np = static_cast<double>(npos), nn = static_cast<double>(nneg);
    return (rank_pos_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

inline double adrg(double accuracy, double majority_ratio) {
    if (accuracy < 0.0 || accuracy > 1.0 || majority_ratio < 0.0 || majority_ratio > 1.0)
        throw ConfigError("adrg: arguments must lie in [0,1]");
    return std::abs(accuracy - majority_ratio);
}

inline double majority_ratio(const std::vector<int>& labels) {
    if (labels.empty()) throw StructuralError("majority_ratio: empty input");
    std::map<int, std::size_t> counts;
    for (int v : labels) ++counts[v];
    std::size_t best = 0;
    for (auto& [v, c] : counts) best = std::max(best, c);
    return static_cast<double>(best) / static_cast<double>(labels.size());
}

struct MetricReport {
    std::map<std::string, double> values;
    std::vector<double> audc_grid;

    void set(const std::string& name, double v) {
        if (!std::isfinite(v))
            throw NumericError("metric '" + name + "' is not finite");
        values[name] = v;
    }

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        for (auto& [k, v] : values) j[k] = v;
        if (!audc_grid.empty()) j["audc_thresholds"] = audc_grid;
        return j;
    }
};

}  // namespace corvec
