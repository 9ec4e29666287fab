#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "corvec/errors.hpp"
#include "corvec/rng.hpp"
#include "corvec/schema.hpp"
#include "corvec/tensor.hpp"

namespace corvec {

struct FeatureMeta {
    std::string name;
    NormKind norm = NormKind::Standard;
    bool flow_eligible = true;  // one-hot columns are excluded from flow models
};

struct Dataset {
    Tensor X;  // n x D feature matrix
    std::vector<int> s;
    std::vector<double> y;
    std::vector<long> query_ids;  // empty when the schema has no query-id column
    std::vector<FeatureMeta> features;
    std::string sensitive_name = "s";
    std::string target_name = "y";
    std::string query_name;

    std::size_t n() const { return X.rows; }
    std::size_t dim() const { return X.cols; }

    int group_count() const {
        int k = 0;
        for (int g : s) k = std::max(k, g + 1);
        return k;
    }

    std::vector<std::size_t> flow_columns() const {
        std::vector<std::size_t> cols;
        for (std::size_t c = 0; c < features.size(); ++c)
            if (features[c].flow_eligible) cols.push_back(c);
        return cols;
    }

    // continuous-feature view for flow models; never contains one-hot columns
    Tensor flow_view() const {
        std::vector<std::size_t> cols = flow_columns();
        Tensor out(n(), cols.size());
        for (std::size_t r = 0; r < n(); ++r)
            for (std::size_t c = 0; c < cols.size(); ++c)
                out.at(r, c) = X.at(r, cols[c]);
        return out;
    }
};

inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& field, std::size_t row,
                           const std::string& col) {
    double v = 0.0;
    const char* b = field.data();
    const char* e = b + field.size();
    auto res = std::from_chars(b, e, v);
    if (res.ec != std::errc{} || res.ptr != e)
        throw IngestError("row " + std::to_string(row) + ", column '" + col +
                          "': cannot parse number from '" + field + "'");
    return v;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    fields.push_back(cur);
    return fields;
}

inline int category_index(const ColumnSpec& spec, const std::string& value,
                          std::size_t row) {
    for (std::size_t i = 0; i < spec.categories.size(); ++i)
        if (spec.categories[i] == value) return static_cast<int>(i);
    throw IngestError("row " + std::to_string(row) + ", column '" + spec.name +
                      "': unseen category '" + value + "'");
}

}  // namespace detail

inline Dataset load_csv(const std::string& path, const DatasetSchema& schema) {
    schema.validate();
    std::ifstream in(path);
    if (!in) throw IngestError("cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw IngestError("'" + path + "': empty file");
    std::vector<std::string> header = detail::split_csv_line(line);
    if (header.size() != schema.columns.size())
        throw IngestError("'" + path + "': header has " + std::to_string(header.size()) +
                          " columns, schema expects " +
                          std::to_string(schema.columns.size()));
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] != schema.columns[i].name)
            throw IngestError("'" + path + "': header column " + std::to_string(i) +
                              " is '" + header[i] + "', schema expects '" +
                              schema.columns[i].name + "'");

    Dataset ds;
    for (const ColumnSpec& c : schema.columns) {
        if (c.kind == ColumnKind::Continuous) {
            ds.features.push_back({c.name, c.norm, true});
        } else if (c.kind == ColumnKind::Categorical) {
            for (const std::string& cat : c.categories)
                ds.features.push_back({c.name + "=" + cat, c.norm, false});
        } else if (c.kind == ColumnKind::Sensitive) {
            ds.sensitive_name = c.name;
        } else if (c.kind == ColumnKind::Target) {
            ds.target_name = c.name;
        } else {
            ds.query_name = c.name;
        }
    }

    std::vector<std::vector<double>> rows;
    std::size_t row_no = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ++row_no;
        std::vector<std::string> fields = detail::split_csv_line(line);
        if (fields.size() != schema.columns.size())
            throw IngestError("row " + std::to_string(row_no) + ": has " +
                              std::to_string(fields.size()) + " fields, expected " +
                              std::to_string(schema.columns.size()));
        std::vector<double> feat;
        feat.reserve(ds.features.size());
        for (std::size_t c = 0; c < schema.columns.size(); ++c) {
            const ColumnSpec& spec = schema.columns[c];
            const std::string& field = fields[c];
            switch (spec.kind) {
                case ColumnKind::Continuous:
                    feat.push_back(parse_double(field, row_no, spec.name));
                    break;
                case ColumnKind::Categorical: {
                    int idx = detail::category_index(spec, field, row_no);
                    for (std::size_t k = 0; k < spec.categories.size(); ++k)
                        feat.push_back(k == static_cast<std::size_t>(idx) ? 1.0 : 0.0);
                    break;
                }
                case ColumnKind::Sensitive: {
                    if (!spec.categories.empty()) {
                        ds.s.push_back(detail::category_index(spec, field, row_no));
                    } else {
                        double v = parse_double(field, row_no, spec.name);
                        if (v != std::floor(v) || v < 0)
                            throw IngestError("row " + std::to_string(row_no) +
                                              ", column '" + spec.name +
                                              "': group label must be a small "
                                              "non-negative integer, got '" +
                                              field + "'");
                        ds.s.push_back(static_cast<int>(v));
                    }
                    break;
                }
                case ColumnKind::Target:
                    ds.y.push_back(parse_double(field, row_no, spec.name));
                    break;
                case ColumnKind::QueryId:
                    ds.query_ids.push_back(
                        static_cast<long>(parse_double(field, row_no, spec.name)));
                    break;
            }
        }
        rows.push_back(std::move(feat));
    }

    if (rows.empty()) throw IngestError("'" + path + "': no data rows");
    ds.X = Tensor::from_rows(rows);
    return ds;
}

/// Writes the dataset as it is stored: expanded feature columns, integer group
/// labels, shortest round-trip decimal text. Reload with an all-continuous
/// schema to recover X bit-exactly.
inline void save_csv(const Dataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IngestError("cannot write '" + path + "'");
    for (const FeatureMeta& f : ds.features) out << f.name << ",";
    out << ds.sensitive_name << "," << ds.target_name;
    if (!ds.query_ids.empty()) out << "," << (ds.query_name.empty() ? "qid" : ds.query_name);
    out << "\n";
    for (std::size_t r = 0; r < ds.n(); ++r) {
        for (std::size_t c = 0; c < ds.dim(); ++c) out << format_double(ds.X.at(r, c)) << ",";
        out << ds.s[r] << "," << format_double(ds.y[r]);
        if (!ds.query_ids.empty()) out << "," << ds.query_ids[r];
        out << "\n";
    }
}

inline Dataset select_rows(const Dataset& ds, const std::vector<std::size_t>& idx) {
    Dataset out;
    out.features = ds.features;
    out.sensitive_name = ds.sensitive_name;
    out.target_name = ds.target_name;
    out.query_name = ds.query_name;
    out.X = Tensor(idx.size(), ds.dim());
    out.s.reserve(idx.size());
    out.y.reserve(idx.size());
    for (std::size_t r = 0; r < idx.size(); ++r) {
        if (idx[r] >= ds.n()) throw StructuralError("select_rows: index out of range");
        for (std::size_t c = 0; c < ds.dim(); ++c) out.X.at(r, c) = ds.X.at(idx[r], c);
        out.s.push_back(ds.s[idx[r]]);
        out.y.push_back(ds.y[idx[r]]);
        if (!ds.query_ids.empty()) out.query_ids.push_back(ds.query_ids[idx[r]]);
    }
    return out;
}

/// Keeps each stratum's share of rows within one row of fraction * count.
/// Strata with a nonzero population never round down to empty.
inline Dataset subsample_stratified(const Dataset& ds, double fraction,
                                    const std::vector<long>& strata,
                                    std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction <= 1.0))
        throw ConfigError("subsample fraction must be in (0,1], got " +
                          std::to_string(fraction));
    if (strata.size() != ds.n())
        throw StructuralError("strata labels must cover every row");
    std::map<long, std::vector<std::size_t>> buckets;
    for (std::size_t i = 0; i < strata.size(); ++i) buckets[strata[i]].push_back(i);

    Rng rng(seed);
    std::vector<std::size_t> chosen;
    for (auto& [key, idx] : buckets) {
        std::size_t m = static_cast<std::size_t>(
            std::llround(fraction * static_cast<double>(idx.size())));
        m = std::max<std::size_t>(1, std::min(m, idx.size()));
        rng.shuffle(idx);
        chosen.insert(chosen.end(), idx.begin(), idx.begin() + m);
    }
    std::sort(chosen.begin(), chosen.end());
    return select_rows(ds, chosen);
}

}  // namespace corvec
