#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "corvec/errors.hpp"
#include "corvec/graph.hpp"
#include "corvec/metrics.hpp"
#include "corvec/mixture.hpp"
#include "corvec/nn.hpp"
#include "corvec/normalize.hpp"
#include "corvec/tensor.hpp"

namespace corvec {

enum class ProbeKind { Logistic, Knn };

inline std::string to_string(ProbeKind k) {
    return k == ProbeKind::Logistic ? "logistic" : "knn";
}

inline ProbeKind probe_kind_from(const std::string& s) {
    if (s == "logistic") return ProbeKind::Logistic;
    if (s == "knn") return ProbeKind::Knn;
    throw ConfigError("unknown probe kind '" + s + "'");
}

struct ProbeReport {
    ProbeKind kind = ProbeKind::Logistic;
    double accuracy = 0.0;
    double auc = 0.0;
    double adrg = 0.0;
};

namespace detail {

inline void check_probe_input(const Tensor& X, const std::vector<int>& s) {
    if (s.size() != X.rows) throw StructuralError("probe: length mismatch");
    if (X.rows < 20) throw ConfigError("probe: need at least 20 rows");
    bool has0 = false, has1 = false;
    for (int g : s) {
        if (g == 0) has0 = true;
        else if (g == 1) has1 = true;
        else throw ConfigError("probe: groups must be 0/1");
    }
    if (!has0 || !has1) throw ConfigError("probe: both groups must be present");
}

// full-batch logistic regression from zero init; standardizing first keeps the
// descent well conditioned without changing what a linear probe can recover
inline std::vector<double> logistic_probe_scores(const Tensor& X,
                                                 const std::vector<int>& s) {
    NormalizationSpec spec =
        fit_normalizer(X, std::vector<NormKind>(X.cols, NormKind::Standard));
    Tensor Xn = apply_normalization(spec, X);
    Tensor st(X.rows, 1);
    for (std::size_t r = 0; r < X.rows; ++r) st.v[r] = static_cast<double>(s[r]);

    Tensor w(X.cols, 1), b(1, 1);
    AdamState opt;
    double prev = std::numeric_limits<double>::infinity();
    for (int epoch = 0; epoch < 500; ++epoch) {
        Graph g;
        Binder bind(g);
        Value logits = g.affine(g.input(Xn, "x"), bind.bind(w, "w"), bind.bind(b, "b"));
        Value loss = g.bce_with_logits(logits, g.input(st, "s"));
        double cur = g.value_of(loss).v[0];
        if (std::abs(prev - cur) < 1e-6) break;
        prev = cur;
        g.backward(loss);
        adam_step(opt, bind, 0.05);
    }

    Graph g;
    Binder bind(g);
    Value p = g.sigmoid(
        g.affine(g.input(Xn, "x"), bind.bind(w, "w"), bind.bind(b, "b")));
    return g.value_of(p).v;
}

// leave-one-out 5-NN: score is the share of the five nearest neighbors in
// group 1, so an odd k never ties the vote
inline std::vector<double> knn_probe_scores(const Tensor& X, const std::vector<int>& s) {
    std::vector<double> scores(X.rows);
    for (std::size_t q = 0; q < X.rows; ++q) {
        std::vector<std::size_t> order = neighbor_order(X, q);
        int ones = 0;
        for (std::size_t k = 0; k < 5; ++k) ones += s[order[k]] == 1;
        scores[q] = ones / 5.0;
    }
    return scores;
}

}  // namespace detail

/// Trains an external model to recover the sensitive attribute from a
/// representation; low ADRG means the representation hides the attribute.
inline ProbeReport probe_representation(const Tensor& X, const std::vector<int>& s,
                                        ProbeKind kind) {
    detail::check_probe_input(X, s);
    ProbeReport rep;
    rep.kind = kind;
    std::vector<double> scores = kind == ProbeKind::Logistic
                                     ? detail::logistic_probe_scores(X, s)
                                     : detail::knn_probe_scores(X, s);
    std::size_t hits = 0;
    std::vector<double> labels(s.size());
    for (std::size_t r = 0; r < s.size(); ++r) {
        labels[r] = static_cast<double>(s[r]);
        if ((scores[r] >= 0.5 ? 1 : 0) == s[r]) ++hits;
    }
    rep.accuracy = static_cast<double>(hits) / static_cast<double>(s.size());
    rep.auc = auc(scores, labels);
    rep.adrg = adrg(rep.accuracy, majority_ratio(s));
    return rep;
}

}  // namespace corvec
