#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "corvec/checkpoint.hpp"
#include "corvec/dataset.hpp"
#include "corvec/errors.hpp"
#include "corvec/explicit_model.hpp"
#include "corvec/fairnf.hpp"
#include "corvec/normalize.hpp"
#include "corvec/tensor.hpp"

namespace corvec {

/// Per-group means of one feature before and after correction, in raw units.
/// The gap convention lists the lowest group id first, so gap = mean(group a)
/// − mean(group b) for a < b; relative change is against the original gap.
struct CorrectionReport {
    std::string feature;
    std::vector<int> groups;
    std::vector<double> original_mean, corrected_mean;  // parallel to groups
    double original_gap = 0.0;
    double corrected_gap = 0.0;   // the "avg. difference" after correction
    double relative_pct = 0.0;    // (corrected − original gap) / original gap * 100
};

namespace detail {

inline std::size_t feature_column(const std::vector<std::string>& names,
                                  const std::string& feature) {
    for (std::size_t c = 0; c < names.size(); ++c)
        if (names[c] == feature) return c;
    throw ConfigError("analyze_corrections: no feature named '" + feature + "'");
}

}  // namespace detail

inline CorrectionReport correction_report(const Tensor& X_raw, const Tensor& Z_raw,
                                          const std::vector<int>& s,
                                          const std::vector<std::string>& names,
                                          const std::string& feature) {
    if (X_raw.rows != Z_raw.rows || X_raw.cols != Z_raw.cols)
        throw StructuralError("correction_report: shape mismatch");
    if (s.size() != X_raw.rows)
        throw StructuralError("correction_report: group count mismatch");
    if (X_raw.rows == 0) throw StructuralError("correction_report: empty input");
    if (names.size() != X_raw.cols)
        throw StructuralError("correction_report: feature name count mismatch");
    std::size_t col = detail::feature_column(names, feature);

    std::map<int, std::pair<double, double>> sums;  // group -> (orig sum, corr sum)
    std::map<int, std::size_t> counts;
    for (std::size_t r = 0; r < X_raw.rows; ++r) {
        sums[s[r]].first += X_raw.at(r, col);
        sums[s[r]].second += Z_raw.at(r, col);
        ++counts[s[r]];
    }

    CorrectionReport rep;
    rep.feature = feature;
    for (const auto& [g, sum] : sums) {
        double n = static_cast<double>(counts[g]);
        rep.groups.push_back(g);
        rep.original_mean.push_back(sum.first / n);
        rep.corrected_mean.push_back(sum.second / n);
    }
    if (rep.groups.size() >= 2) {
        rep.original_gap = rep.original_mean[0] - rep.original_mean[1];
        rep.corrected_gap = rep.corrected_mean[0] - rep.corrected_mean[1];
        rep.relative_pct = rep.original_gap == 0.0
                               ? 0.0
                               : (rep.corrected_gap - rep.original_gap) /
                                     rep.original_gap * 100.0;
    }
    return rep;
}

/// Raw-unit view of an explicit model's corrections over a dataset whose X is
/// in raw units; the model runs on the normalized view internally.
inline CorrectionReport analyze_corrections(const ExplicitModel& m,
                                            const NormalizationSpec& spec,
                                            const Dataset& ds,
                                            const std::string& feature) {
    if (!m.trained) throw ConfigError("analyze_corrections: model is untrained");
    std::vector<std::string> names;
    for (const FeatureMeta& f : ds.features) names.push_back(f.name);
    Tensor X_norm = apply_normalization(spec, ds.X);
    Corrected out = correct(m, X_norm);
    Tensor Z_raw = invert_normalization(spec, out.Z);
    return correction_report(ds.X, Z_raw, ds.s, names, feature);
}

/// Same for a paired-flow model, which only sees the flow-eligible columns.
inline CorrectionReport analyze_corrections(const FairNFModel& m,
                                            const NormalizationSpec& spec,
                                            const Dataset& ds,
                                            const std::string& feature) {
    if (!m.trained) throw ConfigError("analyze_corrections: model is untrained");
    std::vector<std::size_t> cols = ds.flow_columns();
    std::vector<std::string> names;
    for (std::size_t c : cols) names.push_back(ds.features[c].name);
    Tensor X_raw = ds.flow_view();
    Tensor X_norm = apply_normalization(spec, X_raw);
    Tensor Z_raw = invert_normalization(spec, fair_transform(m, X_norm));
    return correction_report(X_raw, Z_raw, ds.s, names, feature);
}

inline CorrectionReport analyze_corrections(const Checkpoint& ckpt, const Dataset& ds,
                                            const std::string& feature) {
    if (ckpt.explicit_model)
        return analyze_corrections(*ckpt.explicit_model, ckpt.norm, ds, feature);
    if (ckpt.flow_model)
        return analyze_corrections(*ckpt.flow_model, ckpt.norm, ds, feature);
    throw ConfigError("analyze_corrections: checkpoint holds no model");
}

inline nlohmann::ordered_json correction_report_to_json(const CorrectionReport& rep) {
    nlohmann::ordered_json j;
    j["feature"] = rep.feature;
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < rep.groups.size(); ++i) {
        nlohmann::ordered_json row;
        row["group"] = rep.groups[i];
        row["original_mean"] = rep.original_mean[i];
        row["corrected_mean"] = rep.corrected_mean[i];
        rows.push_back(row);
    }
    j["per_group"] = rows;
    j["original_gap"] = rep.original_gap;
    j["corrected_gap"] = rep.corrected_gap;
    j["relative_pct"] = rep.relative_pct;
    return j;
}

}  // namespace corvec
