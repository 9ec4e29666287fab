#pragma once

#include <charconv>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "corvec/dataset.hpp"
#include "corvec/errors.hpp"
#include "corvec/explicit_model.hpp"
#include "corvec/fairnf.hpp"
#include "corvec/flow.hpp"
#include "corvec/normalize.hpp"

namespace corvec {

enum class ModelKind { AdvCls, AdvDr, FairnfBase, FairnfFpr, FairnfBce };

inline std::string to_string(ModelKind k) {
    switch (k) {
        case ModelKind::AdvCls: return "advcls";
        case ModelKind::AdvDr: return "advdr";
        case ModelKind::FairnfBase: return "fairnf-base";
        case ModelKind::FairnfFpr: return "fairnf-fpr";
        default: return "fairnf-bce";
    }
}

inline ModelKind model_kind_from(const std::string& s) {
    if (s == "advcls") return ModelKind::AdvCls;
    if (s == "advdr") return ModelKind::AdvDr;
    if (s == "fairnf-base") return ModelKind::FairnfBase;
    if (s == "fairnf-fpr") return ModelKind::FairnfFpr;
    if (s == "fairnf-bce") return ModelKind::FairnfBce;
    throw ConfigError("unknown model kind '" + s + "'");
}

inline bool is_flow_kind(ModelKind k) {
    return k == ModelKind::FairnfBase || k == ModelKind::FairnfFpr ||
           k == ModelKind::FairnfBce;
}

inline std::string to_string(TaskKind t) {
    return t == TaskKind::Cls ? "cls" : "rank";
}

inline TaskKind task_kind_from(const std::string& s) {
    if (s == "cls") return TaskKind::Cls;
    if (s == "rank") return TaskKind::Rank;
    throw ConfigError("unknown task '" + s + "'");
}

inline std::string to_string(Act a) {
    switch (a) {
        case Act::Tanh: return "tanh";
        case Act::Sigmoid: return "sigmoid";
        default: return "none";
    }
}

inline Act act_from(const std::string& s) {
    if (s == "tanh") return Act::Tanh;
    if (s == "sigmoid") return Act::Sigmoid;
    if (s == "none") return Act::None;
    throw IngestError("checkpoint: unknown activation '" + s + "'");
}

namespace detail {

// every float in a checkpoint travels as a shortest round-trip decimal string
inline double ckpt_num(const nlohmann::ordered_json& j, const std::string& what) {
    if (!j.is_string())
        throw IngestError("checkpoint: " + what + " must be a decimal string");
    const std::string& s = j.get_ref<const std::string&>();
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw IngestError("checkpoint: cannot parse " + what + " from '" + s + "'");
    return v;
}

inline nlohmann::ordered_json tensor_to_json(const Tensor& t) {
    nlohmann::ordered_json j;
    j["rows"] = t.rows;
    j["cols"] = t.cols;
    nlohmann::ordered_json vals = nlohmann::ordered_json::array();
    for (double v : t.v) vals.push_back(format_double(v));
    j["values"] = vals;
    return j;
}

inline Tensor tensor_from_json(const nlohmann::ordered_json& j, const std::string& what) {
    Tensor t(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
    const auto& vals = j.at("values");
    if (vals.size() != t.v.size())
        throw IngestError("checkpoint: " + what + " has " + std::to_string(vals.size()) +
                          " values for a " + std::to_string(t.rows) + "x" +
                          std::to_string(t.cols) + " tensor");
    for (std::size_t i = 0; i < t.v.size(); ++i)
        t.v[i] = ckpt_num(vals[i], what + " value");
    return t;
}

inline nlohmann::ordered_json mlp_to_json(const Mlp& m) {
    nlohmann::ordered_json j;
    j["hidden_act"] = to_string(m.hidden);
    j["out_act"] = to_string(m.out);
    nlohmann::ordered_json widths = nlohmann::ordered_json::array();
    if (!m.layers.empty()) {
        widths.push_back(m.layers.front().w.rows);
        for (const Linear& l : m.layers) widths.push_back(l.w.cols);
    }
    j["widths"] = widths;
    nlohmann::ordered_json layers = nlohmann::ordered_json::array();
    for (const Linear& l : m.layers) {
        nlohmann::ordered_json jl;
        jl["w"] = tensor_to_json(l.w);
        jl["b"] = tensor_to_json(l.b);
        layers.push_back(jl);
    }
    j["layers"] = layers;
    return j;
}

inline Mlp mlp_from_json(const nlohmann::ordered_json& j, const std::string& what) {
    Mlp m;
    m.hidden = act_from(j.at("hidden_act").get<std::string>());
    m.out = act_from(j.at("out_act").get<std::string>());
    for (const auto& jl : j.at("layers")) {
        Linear l;
        l.w = tensor_from_json(jl.at("w"), what + " weight");
        l.b = tensor_from_json(jl.at("b"), what + " bias");
        if (l.b.rows != 1 || l.b.cols != l.w.cols)
            throw IngestError("checkpoint: " + what + " bias shape mismatch");
        m.layers.push_back(std::move(l));
    }
    if (m.layers.empty()) throw IngestError("checkpoint: " + what + " has no layers");
    for (std::size_t i = 0; i + 1 < m.layers.size(); ++i)
        if (m.layers[i].w.cols != m.layers[i + 1].w.rows)
            throw IngestError("checkpoint: " + what + " layer widths disagree");
    return m;
}

inline nlohmann::ordered_json flow_to_json(const FlowStack& f) {
    nlohmann::ordered_json j;
    j["dim"] = f.D;
    nlohmann::ordered_json layers = nlohmann::ordered_json::array();
    for (const CouplingLayer& l : f.layers) {
        nlohmann::ordered_json jl;
        jl["flip"] = l.flip;
        nlohmann::ordered_json mask = nlohmann::ordered_json::array();
        for (std::size_t c = 0; c < l.D; ++c) {
            bool kept = l.flip ? c >= l.D - l.d : c < l.d;
            mask.push_back(kept ? 1 : 0);
        }
        jl["mask"] = mask;  // 1 = coordinate passes through unchanged
        jl["scale_net"] = mlp_to_json(l.scale_net);
        jl["shift_net"] = mlp_to_json(l.shift_net);
        layers.push_back(jl);
    }
    j["layers"] = layers;
    return j;
}

inline FlowStack flow_from_json(const nlohmann::ordered_json& j, const std::string& what) {
    FlowStack f;
    f.D = j.at("dim").get<std::size_t>();
    std::size_t d = (f.D + 1) / 2;
    for (const auto& jl : j.at("layers")) {
        CouplingLayer l;
        l.D = f.D;
        l.d = d;
        l.flip = jl.at("flip").get<bool>();
        l.scale_net = mlp_from_json(jl.at("scale_net"), what + " scale net");
        l.shift_net = mlp_from_json(jl.at("shift_net"), what + " shift net");
        if (l.scale_net.in_dim() != d || l.scale_net.out_dim() != f.D - d ||
            l.shift_net.in_dim() != d || l.shift_net.out_dim() != f.D - d)
            throw IngestError("checkpoint: " + what + " subnet widths disagree with dim");
        f.layers.push_back(std::move(l));
    }
    if (f.layers.empty()) throw IngestError("checkpoint: " + what + " has no layers");
    return f;
}

inline nlohmann::ordered_json norm_to_json(const NormalizationSpec& spec) {
    nlohmann::ordered_json cols = nlohmann::ordered_json::array();
    for (const auto& c : spec.cols) {
        nlohmann::ordered_json jc;
        jc["kind"] = to_string(c.kind);
        jc["a"] = format_double(c.a);
        jc["b"] = format_double(c.b);
        cols.push_back(jc);
    }
    return cols;
}

inline NormalizationSpec norm_from_json(const nlohmann::ordered_json& j) {
    NormalizationSpec spec;
    for (const auto& jc : j) {
        NormalizationSpec::Column c;
        c.kind = norm_kind_from(jc.at("kind").get<std::string>());
        c.a = ckpt_num(jc.at("a"), "normalization offset");
        c.b = ckpt_num(jc.at("b"), "normalization scale");
        spec.cols.push_back(c);
    }
    return spec;
}

}  // namespace detail

/// Everything needed to rebuild a trained model and map between raw and
/// normalized feature units: the model parameters, the fitted normalizer, and
/// which dataset columns the model consumes.
struct Checkpoint {
    ModelKind kind = ModelKind::AdvCls;
    NormalizationSpec norm;
    std::vector<std::string> feature_names;  // columns the model consumes, in order
    std::vector<std::size_t> columns;        // their indices in the source dataset
    std::optional<ExplicitModel> explicit_model;
    std::optional<FairNFModel> flow_model;

    TaskKind task() const {
        return explicit_model ? explicit_model->task
                              : (flow_model ? flow_model->task : TaskKind::Cls);
    }
    bool trained() const {
        return (explicit_model && explicit_model->trained) ||
               (flow_model && flow_model->trained);
    }
};

inline nlohmann::ordered_json checkpoint_to_json(const Checkpoint& ckpt) {
    if (is_flow_kind(ckpt.kind) ? !ckpt.flow_model : !ckpt.explicit_model)
        throw ConfigError("checkpoint_to_json: model kind disagrees with stored model");
    nlohmann::ordered_json j;
    j["format"] = "corvec-checkpoint-1";
    j["kind"] = to_string(ckpt.kind);
    j["task"] = to_string(ckpt.task());
    j["feature_names"] = ckpt.feature_names;
    j["columns"] = ckpt.columns;
    j["normalization"] = detail::norm_to_json(ckpt.norm);
    if (ckpt.explicit_model) {
        const ExplicitModel& m = *ckpt.explicit_model;
        nlohmann::ordered_json je;
        je["dim"] = m.D;
        je["norm"] = to_string(m.norm);
        je["s_classes"] = m.s_classes;
        je["lambda"] = format_double(m.lambda);
        je["trained"] = m.trained;
        je["extractor"] = detail::mlp_to_json(m.extractor);
        je["adversary"] = detail::mlp_to_json(m.adversary);
        je["head"] = detail::mlp_to_json(m.head);
        j["explicit"] = je;
    } else {
        const FairNFModel& m = *ckpt.flow_model;
        nlohmann::ordered_json jf;
        jf["dim"] = m.D;
        jf["variant"] = to_string(m.variant);
        jf["gamma"] = format_double(m.gamma);
        jf["pivot_group"] = m.pivot_group;
        jf["trained"] = m.trained;
        jf["f_all"] = detail::flow_to_json(m.f_all);
        jf["f_p"] = detail::flow_to_json(m.f_p);
        jf["predictor"] = detail::mlp_to_json(m.predictor);
        if (m.variant == FairNFVariant::Bce) {
            nlohmann::ordered_json jr;
            jr["w"] = detail::tensor_to_json(m.bce_readout.w);
            jr["b"] = detail::tensor_to_json(m.bce_readout.b);
            jf["bce_readout"] = jr;
        }
        j["flow"] = jf;
    }
    return j;
}

inline Checkpoint checkpoint_from_json(const nlohmann::ordered_json& j) {
    if (j.value("format", "") != std::string("corvec-checkpoint-1"))
        throw IngestError("checkpoint: unknown or missing format tag");
    Checkpoint ckpt;
    ckpt.kind = model_kind_from(j.at("kind").get<std::string>());
    TaskKind task = task_kind_from(j.at("task").get<std::string>());
    ckpt.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    ckpt.columns = j.at("columns").get<std::vector<std::size_t>>();
    ckpt.norm = detail::norm_from_json(j.at("normalization"));
    if (ckpt.norm.dim() != ckpt.feature_names.size() ||
        ckpt.columns.size() != ckpt.feature_names.size())
        throw IngestError("checkpoint: feature list and normalization disagree");
    if (!is_flow_kind(ckpt.kind)) {
        const auto& je = j.at("explicit");
        ExplicitModel m;
        m.D = je.at("dim").get<std::size_t>();
        m.norm = norm_kind_from(je.at("norm").get<std::string>());
        m.task = task;
        m.s_classes = je.at("s_classes").get<int>();
        m.lambda = detail::ckpt_num(je.at("lambda"), "lambda");
        m.trained = je.at("trained").get<bool>();
        m.extractor = detail::mlp_from_json(je.at("extractor"), "extractor");
        m.adversary = detail::mlp_from_json(je.at("adversary"), "adversary");
        m.head = detail::mlp_from_json(je.at("head"), "head");
        if (m.extractor.in_dim() != m.D || m.extractor.out_dim() != m.D)
            throw IngestError("checkpoint: extractor width disagrees with dim");
        ckpt.explicit_model = std::move(m);
    } else {
        const auto& jf = j.at("flow");
        FairNFModel m;
        m.variant = fairnf_variant_from(jf.at("variant").get<std::string>());
        m.task = task;
        m.D = jf.at("dim").get<std::size_t>();
        m.gamma = detail::ckpt_num(jf.at("gamma"), "gamma");
        m.pivot_group = jf.at("pivot_group").get<int>();
        m.trained = jf.at("trained").get<bool>();
        m.f_all = detail::flow_from_json(jf.at("f_all"), "f_all");
        m.f_p = detail::flow_from_json(jf.at("f_p"), "f_p");
        m.predictor = detail::mlp_from_json(jf.at("predictor"), "predictor");
        if (m.variant == FairNFVariant::Bce) {
            const auto& jr = jf.at("bce_readout");
            m.bce_readout.w = detail::tensor_from_json(jr.at("w"), "bce readout weight");
            m.bce_readout.b = detail::tensor_from_json(jr.at("b"), "bce readout bias");
        }
        if (m.f_all.D != m.D || m.f_p.D != m.D)
            throw IngestError("checkpoint: flow dims disagree");
        ckpt.flow_model = std::move(m);
    }
    if (ckpt.norm.dim() != (ckpt.explicit_model ? ckpt.explicit_model->D
                                                : ckpt.flow_model->D))
        throw IngestError("checkpoint: normalization width disagrees with model dim");
    return ckpt;
}

inline void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IngestError("cannot write '" + path + "'");
    out << checkpoint_to_json(ckpt).dump(2) << "\n";
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IngestError("cannot open checkpoint '" + path + "'");
    nlohmann::ordered_json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw IngestError("checkpoint '" + path + "': " + e.what());
    }
    return checkpoint_from_json(j);
}

}  // namespace corvec
