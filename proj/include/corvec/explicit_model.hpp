#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "corvec/dataset.hpp"
#include "corvec/errors.hpp"
#include "corvec/graph.hpp"
#include "corvec/metrics.hpp"
#include "corvec/nn.hpp"
#include "corvec/pairs.hpp"
#include "corvec/rng.hpp"
#include "corvec/schema.hpp"

namespace corvec {

enum class TaskKind { Cls, Rank };

struct ExplicitTrainConfig {
    double lambda = 1.0;  // adversary strength; 0 detaches the adversary
    double lr = 0.01;
    int epochs = 60;
    std::size_t batch = 64;
    std::uint64_t seed = 0;
};

/// Correction extractor with an input skip connection: w = act(f(x)), z = w + x.
/// The final activation follows the feature normalization: tanh for standard
/// scaling, a shifted sigmoid 2*sigmoid(.)-1 for minmax (a plain sigmoid in
/// (0,1) added to x in [0,1] could leave the admissible range entirely, so the
/// shifted form keeps corrections sign-symmetric; Z is clamped to [0,1] only
/// for reporting).
struct ExplicitModel {
    std::size_t D = 0;
    NormKind norm = NormKind::Standard;
    TaskKind task = TaskKind::Cls;
    int s_classes = 2;
    double lambda = 1.0;
    Mlp extractor;  // D -> hidden -> D, activation applied outside
    Mlp adversary;  // D -> max(8,D) -> 1 or K
    Mlp head;       // cls: D -> max(8,D) -> 1; rank: single linear neuron
    bool trained = false;

    std::vector<Tensor*> params() {
        std::vector<Tensor*> ps = extractor.params();
        for (Tensor* t : head.params()) ps.push_back(t);
        for (Tensor* t : adversary.params()) ps.push_back(t);
        return ps;
    }
};

inline ExplicitModel build_explicit(std::size_t D, const std::vector<std::size_t>& hidden,
                                    NormKind norm, TaskKind task, int s_classes, Rng& rng,
                                    bool zero_last = true) {
    if (D < 1) throw ConfigError("build_explicit: D must be >= 1");
    if (norm == NormKind::None)
        throw ConfigError("build_explicit: model needs standard or minmax normalization");
    if (s_classes < 2) throw ConfigError("build_explicit: need at least 2 groups");
    ExplicitModel m;
    m.D = D;
    m.norm = norm;
    m.task = task;
    m.s_classes = s_classes;
    std::vector<std::size_t> dims = {D};
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(D);
    m.extractor = Mlp(dims, Act::Tanh, Act::None, rng, zero_last);
    std::size_t aw = std::max<std::size_t>(8, D);
    m.adversary = Mlp({D, aw, s_classes == 2 ? 1 : static_cast<std::size_t>(s_classes)},
                      Act::Tanh, Act::None, rng);
    if (task == TaskKind::Cls)
        m.head = Mlp({D, aw, 1}, Act::Tanh, Act::None, rng);
    else
        m.head = Mlp({D, 1}, Act::Tanh, Act::None, rng);  // one linear neuron
    return m;
}

namespace detail {

inline void check_normalized_input(const ExplicitModel& m, const Tensor& X) {
    if (X.cols != m.D)
        throw StructuralError("explicit model expects " + std::to_string(m.D) +
                              " features, got " + std::to_string(X.cols));
    if (m.norm == NormKind::Minmax) {
        for (double v : X.v)
            if (v < -1e-9 || v > 1.0 + 1e-9)
                throw StructuralError(
                    "input outside [0,1]: minmax-normalized features required");
    } else {
        for (double v : X.v)
            if (std::abs(v) > 1e3)
                throw StructuralError(
                    "input magnitude over 1e3: standard-normalized features required");
    }
}

inline Value correction_activation(Graph& g, Value raw, NormKind norm) {
    if (norm == NormKind::Standard) return g.tanh(raw);
    return g.add_scalar(g.scale(g.sigmoid(raw), 2.0), -1.0);
}

struct ExplicitForward {
    Value w, z;
};

inline ExplicitForward explicit_forward(const ExplicitModel& m, Graph& g, Binder& bind,
                                        Value x) {
    Value raw = m.extractor.forward(g, bind, x, "extractor");
    Value w = correction_activation(g, raw, m.norm);
    return {w, g.add(w, x)};
}

inline Tensor rows_subset(const Tensor& X, const std::vector<std::size_t>& idx) {
    Tensor out(idx.size(), X.cols);
    for (std::size_t r = 0; r < idx.size(); ++r)
        for (std::size_t c = 0; c < X.cols; ++c) out.at(r, c) = X.at(idx[r], c);
    return out;
}

inline Tensor onehot_targets(const std::vector<int>& s, const std::vector<std::size_t>& idx,
                             int classes) {
    Tensor t(idx.size(), classes);
    for (std::size_t r = 0; r < idx.size(); ++r) {
        int v = s[idx[r]];
        if (v < 0 || v >= classes)
            throw StructuralError("group label " + std::to_string(v) + " out of range");
        t.at(r, v) = 1.0;
    }
    return t;
}

// adversary loss on a corrected representation; lambda == 0 detaches it so no
// gradient reaches the extractor, matching a reversal-free predictor exactly
inline Value adversary_loss(const ExplicitModel& m, Graph& g, Binder& bind, Value z,
                            const Tensor& s_targets) {
    Value in = m.lambda > 0.0 ? g.grad_reverse(z, m.lambda)
                              : g.input(g.value_of(z), "z_detached");
    Value logits = m.adversary.forward(g, bind, in, "adversary");
    if (m.s_classes == 2) return g.bce_with_logits(logits, g.input(s_targets, "s"));
    return g.softmax_cross_entropy(logits, g.input(s_targets, "s"));
}

}  // namespace detail

struct Corrected {
    Tensor W, Z;
    Tensor Z_clamped;  // Z held to [0,1] for minmax reporting; equals Z otherwise
};

inline Corrected correct(const ExplicitModel& m, const Tensor& X_norm) {
    detail::check_normalized_input(m, X_norm);
    Graph g;
    Binder bind(g);
    auto fwd = detail::explicit_forward(m, g, bind, g.input(X_norm, "x"));
    Corrected out;
    out.W = g.value_of(fwd.w);
    out.Z = g.value_of(fwd.z);
    out.Z_clamped = out.Z;
    if (m.norm == NormKind::Minmax)
        for (double& v : out.Z_clamped.v) v = std::clamp(v, 0.0, 1.0);
    return out;
}

struct TrainTrace {
    std::vector<double> total, task, adversary;
};

/// Joint minibatch training of extractor, task head, and adversary behind
/// gradient reversal: loss = task BCE + adversary CE, with the reversal
/// flipping the adversary's pull on the extractor.
inline TrainTrace train_advcls(ExplicitModel& m, const Dataset& ds,
                               const ExplicitTrainConfig& cfg) {
    if (m.task != TaskKind::Cls) throw ConfigError("train_advcls: model task is rank");
    detail::check_normalized_input(m, ds.X);
    if (cfg.epochs < 1) throw ConfigError("train_advcls: epochs must be >= 1");
    if (cfg.lambda < 0) throw ConfigError("train_advcls: lambda must be >= 0");
    m.lambda = cfg.lambda;
    for (double v : ds.y)
        if (v != 0.0 && v != 1.0)
            throw ConfigError("train_advcls: targets must be binary");

    Rng shuffle_rng(mix_seed(cfg.seed, 101));
    AdamState opt;
    TrainTrace trace;
    std::vector<std::size_t> idx(ds.n());
    std::iota(idx.begin(), idx.end(), 0);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(idx);
        double sum_total = 0, sum_task = 0, sum_adv = 0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < idx.size(); start += cfg.batch) {
            std::vector<std::size_t> b(idx.begin() + start,
                                       idx.begin() + std::min(idx.size(), start + cfg.batch));
            try {
                Graph g;
                Binder bind(g);
                Tensor Xb = detail::rows_subset(ds.X, b);
                Tensor yb(b.size(), 1);
                for (std::size_t r = 0; r < b.size(); ++r) yb.v[r] = ds.y[b[r]];
                auto fwd = detail::explicit_forward(m, g, bind, g.input(Xb, "x"));
                Value y_logits = m.head.forward(g, bind, fwd.z, "head");
                Value task_loss = g.bce_with_logits(y_logits, g.input(yb, "y"));
                Tensor st = m.s_classes == 2
                                ? [&] {
                                      Tensor t(b.size(), 1);
                                      for (std::size_t r = 0; r < b.size(); ++r)
                                          t.v[r] = static_cast<double>(ds.s[b[r]]);
                                      return t;
                                  }()
                                : detail::onehot_targets(ds.s, b, m.s_classes);
                Value adv_loss = detail::adversary_loss(m, g, bind, fwd.z, st);
                Value total = g.add(task_loss, adv_loss);
                g.backward(total);
                adam_step(opt, bind, cfg.lr);
                sum_total += g.value_of(total).v[0];
                sum_task += g.value_of(task_loss).v[0];
                sum_adv += g.value_of(adv_loss).v[0];
                ++batches;
            } catch (const NumericError& e) {
                throw NumericError("train_advcls diverged at epoch " +
                                   std::to_string(epoch) + ": " + e.what());
            }
        }
        trace.total.push_back(sum_total / batches);
        trace.task.push_back(sum_task / batches);
        trace.adversary.push_back(sum_adv / batches);
    }
    m.trained = true;
    return trace;
}

/// Pairwise ranking variant: squared error between tanh(g(z1) - g(z2)) and
/// targets 2*dy - 1, plus the same reversed adversary on both pair members.
inline TrainTrace train_advdr(ExplicitModel& m, const Dataset& ds,
                              const std::vector<RankPair>& pairs,
                              const ExplicitTrainConfig& cfg) {
    if (m.task != TaskKind::Rank) throw ConfigError("train_advdr: model task is cls");
    detail::check_normalized_input(m, ds.X);
    if (pairs.empty()) throw ConfigError("train_advdr: no pairs");
    if (cfg.epochs < 1) throw ConfigError("train_advdr: epochs must be >= 1");
    m.lambda = cfg.lambda;

    Rng shuffle_rng(mix_seed(cfg.seed, 202));
    AdamState opt;
    TrainTrace trace;
    std::vector<std::size_t> idx(pairs.size());
    std::iota(idx.begin(), idx.end(), 0);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(idx);
        double sum_total = 0, sum_task = 0, sum_adv = 0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < idx.size(); start += cfg.batch) {
            std::vector<std::size_t> bp(idx.begin() + start,
                                        idx.begin() + std::min(idx.size(), start + cfg.batch));
            std::vector<std::size_t> left, right;
            Tensor target(bp.size(), 1);
            for (std::size_t r = 0; r < bp.size(); ++r) {
                left.push_back(pairs[bp[r]].i);
                right.push_back(pairs[bp[r]].j);
                target.v[r] = 2.0 * pairs[bp[r]].dy - 1.0;
            }
            try {
                Graph g;
                Binder bind(g);
                Value x1 = g.input(detail::rows_subset(ds.X, left), "x1");
                Value x2 = g.input(detail::rows_subset(ds.X, right), "x2");
                auto f1 = detail::explicit_forward(m, g, bind, x1);
                auto f2 = detail::explicit_forward(m, g, bind, x2);
                Value g1 = m.head.forward(g, bind, f1.z, "head");
                Value g2 = m.head.forward(g, bind, f2.z, "head");
                Value f = g.tanh(g.sub(g1, g2));
                Value task_loss = g.mean(g.square(g.sub(g.input(target, "dy"), f)));

                Tensor s1(bp.size(), 1), s2(bp.size(), 1);
                Value adv_loss;
                if (m.s_classes == 2) {
                    for (std::size_t r = 0; r < bp.size(); ++r) {
                        s1.v[r] = static_cast<double>(ds.s[left[r]]);
                        s2.v[r] = static_cast<double>(ds.s[right[r]]);
                    }
                    adv_loss = g.scale(g.add(detail::adversary_loss(m, g, bind, f1.z, s1),
                                             detail::adversary_loss(m, g, bind, f2.z, s2)),
                                       0.5);
                } else {
                    adv_loss = g.scale(
                        g.add(detail::adversary_loss(
                                  m, g, bind, f1.z,
                                  detail::onehot_targets(ds.s, left, m.s_classes)),
                              detail::adversary_loss(
                                  m, g, bind, f2.z,
                                  detail::onehot_targets(ds.s, right, m.s_classes))),
                        0.5);
                }
                Value total = g.add(task_loss, adv_loss);
                g.backward(total);
                adam_step(opt, bind, cfg.lr);
                sum_total += g.value_of(total).v[0];
                sum_task += g.value_of(task_loss).v[0];
                sum_adv += g.value_of(adv_loss).v[0];
                ++batches;
            } catch (const NumericError& e) {
                throw NumericError("train_advdr diverged at epoch " +
                                   std::to_string(epoch) + ": " + e.what());
            }
        }
        trace.total.push_back(sum_total / batches);
        trace.task.push_back(sum_task / batches);
        trace.adversary.push_back(sum_adv / batches);
    }
    m.trained = true;
    return trace;
}

/// Scores for ranking or classification on corrected features: classification
/// returns sigmoid probabilities, ranking returns the raw scoring neuron g(z).
inline std::vector<double> predict_scores(const ExplicitModel& m, const Tensor& X_norm) {
    detail::check_normalized_input(m, X_norm);
    Graph g;
    Binder bind(g);
    auto fwd = detail::explicit_forward(m, g, bind, g.input(X_norm, "x"));
    Value out = m.head.forward(g, bind, fwd.z, "head");
    if (m.task == TaskKind::Cls) out = g.sigmoid(out);
    return g.value_of(out).v;
}

struct ProbeLoss {
    double bce = 0.0;
    double accuracy = 0.0;
};

/// Runs the model's own adversary on corrected features and reports how well
/// it still recovers the sensitive attribute.
inline ProbeLoss adversary_probe_loss(const ExplicitModel& m, const Tensor& X_norm,
                                      const std::vector<int>& s) {
    detail::check_normalized_input(m, X_norm);
    if (s.size() != X_norm.rows) throw StructuralError("adversary_probe_loss: length mismatch");
    Graph g;
    Binder bind(g);
    auto fwd = detail::explicit_forward(m, g, bind, g.input(X_norm, "x"));
    Value logits = m.adversary.forward(g, bind, fwd.z, "adversary");
    const Tensor& L = g.value_of(logits);
    ProbeLoss out;
    std::size_t hits = 0;
    if (m.s_classes == 2) {
        Tensor st(X_norm.rows, 1);
        for (std::size_t r = 0; r < s.size(); ++r) st.v[r] = static_cast<double>(s[r]);
        out.bce = g.value_of(g.bce_with_logits(logits, g.input(st, "s"))).v[0];
        for (std::size_t r = 0; r < s.size(); ++r)
            if ((L.v[r] >= 0.0 ? 1 : 0) == s[r]) ++hits;
    } else {
        std::vector<std::size_t> all(s.size());
        std::iota(all.begin(), all.end(), 0);
        Tensor st = detail::onehot_targets(s, all, m.s_classes);
        out.bce = g.value_of(g.softmax_cross_entropy(logits, g.input(st, "s"))).v[0];
        for (std::size_t r = 0; r < s.size(); ++r) {
            std::size_t arg = 0;
            for (std::size_t c = 1; c < L.cols; ++c)
                if (L.at(r, c) > L.at(r, arg)) arg = c;
            if (static_cast<int>(arg) == s[r]) ++hits;
        }
    }
    out.accuracy = static_cast<double>(hits) / static_cast<double>(s.size());
    return out;
}

}  // namespace corvec
