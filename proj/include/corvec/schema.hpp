#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "corvec/errors.hpp"

namespace corvec {

enum class ColumnKind { Continuous, Categorical, Sensitive, Target, QueryId };
enum class NormKind { Standard, Minmax, None };

inline std::string to_string(ColumnKind k) {
    switch (k) {
        case ColumnKind::Continuous: return "continuous";
        case ColumnKind::Categorical: return "categorical";
        case ColumnKind::Sensitive: return "sensitive";
        case ColumnKind::Target: return "target";
        default: return "query-id";
    }
}

inline std::string to_string(NormKind k) {
    switch (k) {
        case NormKind::Standard: return "standard";
        case NormKind::Minmax: return "minmax";
        default: return "none";
    }
}

inline ColumnKind column_kind_from(const std::string& s) {
    if (s == "continuous") return ColumnKind::Continuous;
    if (s == "categorical") return ColumnKind::Categorical;
    if (s == "sensitive") return ColumnKind::Sensitive;
    if (s == "target") return ColumnKind::Target;
    if (s == "query-id") return ColumnKind::QueryId;
    throw ConfigError("unknown column kind '" + s + "'");
}

inline NormKind norm_kind_from(const std::string& s) {
    if (s == "standard") return NormKind::Standard;
    if (s == "minmax") return NormKind::Minmax;
    if (s == "none") return NormKind::None;
    throw ConfigError("unknown normalization '" + s + "'");
}

struct ColumnSpec {
    std::string name;
    ColumnKind kind = ColumnKind::Continuous;
    NormKind norm = NormKind::Standard;
    std::vector<std::string> categories;  // categorical and string-valued sensitive columns
};

struct DatasetSchema {
    std::vector<ColumnSpec> columns;

    void validate() const {
        int sensitive = 0, target = 0;
        for (const ColumnSpec& c : columns) {
            if (c.kind == ColumnKind::Sensitive) ++sensitive;
            if (c.kind == ColumnKind::Target) ++target;
            if (c.kind == ColumnKind::Categorical && c.categories.empty())
                throw ConfigError("categorical column '" + c.name +
                                  "' has no category list");
        }
        if (sensitive != 1)
            throw ConfigError("schema needs exactly one sensitive column, found " +
                              std::to_string(sensitive));
        if (target != 1)
            throw ConfigError("schema needs exactly one target column, found " +
                              std::to_string(target));
    }
};

inline DatasetSchema schema_from_json(const nlohmann::json& j) {
    DatasetSchema schema;
    if (!j.contains("columns") || !j["columns"].is_array())
        throw ConfigError("schema json needs a 'columns' array");
    for (const auto& jc : j["columns"]) {
        ColumnSpec c;
        c.name = jc.at("name").get<std::string>();
        c.kind = column_kind_from(jc.at("kind").get<std::string>());
        if (jc.contains("normalization"))
            c.norm = norm_kind_from(jc["normalization"].get<std::string>());
        else if (c.kind == ColumnKind::Categorical)
            c.norm = NormKind::Minmax;
        if (jc.contains("categories"))
            for (const auto& cat : jc["categories"])
                c.categories.push_back(cat.get<std::string>());
        schema.columns.push_back(std::move(c));
    }
    schema.validate();
    return schema;
}

inline DatasetSchema load_schema(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IngestError("cannot open schema file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw IngestError("schema '" + path + "': " + e.what());
    }
    return schema_from_json(j);
}

inline nlohmann::ordered_json schema_to_json(const DatasetSchema& schema) {
    nlohmann::ordered_json j;
    j["columns"] = nlohmann::ordered_json::array();
    for (const ColumnSpec& c : schema.columns) {
        nlohmann::ordered_json jc;
        jc["name"] = c.name;
        jc["kind"] = to_string(c.kind);
        jc["normalization"] = to_string(c.norm);
        if (!c.categories.empty()) jc["categories"] = c.categories;
        j["columns"].push_back(jc);
    }
    return j;
}

}  // namespace corvec
