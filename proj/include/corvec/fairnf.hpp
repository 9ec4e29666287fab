#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "corvec/dataset.hpp"
#include "corvec/errors.hpp"
#include "corvec/explicit_model.hpp"
#include "corvec/flow.hpp"
#include "corvec/graph.hpp"
#include "corvec/nn.hpp"
#include "corvec/pairs.hpp"
#include "corvec/rng.hpp"

namespace corvec {

enum class FairNFVariant { Base, Fpr, Bce };

inline std::string to_string(FairNFVariant v) {
    switch (v) {
        case FairNFVariant::Base: return "base";
        case FairNFVariant::Fpr: return "fpr";
        default: return "bce";
    }
}

inline FairNFVariant fairnf_variant_from(const std::string& s) {
    if (s == "base") return FairNFVariant::Base;
    if (s == "fpr") return FairNFVariant::Fpr;
    if (s == "bce") return FairNFVariant::Bce;
    throw ConfigError("unknown FairNF variant '" + s + "'");
}

struct FairNFConfig {
    FairNFVariant variant = FairNFVariant::Base;
    TaskKind task = TaskKind::Cls;
    double gamma = 1.0;
    int pivot_group = 0;
    std::size_t n_layers = 8;
    std::vector<std::size_t> subnet_hidden = {16, 16};
    std::vector<std::size_t> predictor_hidden = {8};
    double lr = 0.001;
    int epochs = 60;
    std::size_t batch = 64;
    std::uint64_t seed = 0;
};

/// Paired flows: f_all fits the whole data, f_p fits the pivot group alone, so
/// f_p^-1(f_all(x)) carries every group onto the pivot group's distribution.
/// The fpr and bce variants zero the first latent coordinate on the way
/// through, deliberately breaking the bijection.
struct FairNFModel {
    FairNFVariant variant = FairNFVariant::Base;
    TaskKind task = TaskKind::Cls;
    double gamma = 1.0;
    int pivot_group = 0;
    std::size_t D = 0;
    FlowStack f_all, f_p;
    Mlp predictor;       // cls: D -> hidden -> 1; rank: single linear neuron
    Linear bce_readout;  // logistic probe on z1, bce variant only
    bool trained = false;

    std::vector<Tensor*> params() {
        std::vector<Tensor*> ps = f_all.params();
        for (Tensor* t : f_p.params()) ps.push_back(t);
        for (Tensor* t : predictor.params()) ps.push_back(t);
        if (variant == FairNFVariant::Bce) {
            ps.push_back(&bce_readout.w);
            ps.push_back(&bce_readout.b);
        }
        return ps;
    }
};

inline FairNFModel build_fairnf(std::size_t D, const FairNFConfig& cfg, Rng& rng) {
    FairNFModel m;
    m.variant = cfg.variant;
    m.task = cfg.task;
    m.gamma = cfg.gamma;
    m.pivot_group = cfg.pivot_group;
    m.D = D;
    m.f_all = make_flow(D, cfg.n_layers, cfg.subnet_hidden, rng);
    m.f_p = make_flow(D, cfg.n_layers, cfg.subnet_hidden, rng);
    if (cfg.task == TaskKind::Cls) {
        std::vector<std::size_t> dims = {D};
        dims.insert(dims.end(), cfg.predictor_hidden.begin(), cfg.predictor_hidden.end());
        dims.push_back(1);
        m.predictor = Mlp(dims, Act::Tanh, Act::None, rng);
    } else {
        m.predictor = Mlp({D, 1}, Act::Tanh, Act::None, rng);
    }
    m.bce_readout = Linear(1, 1, rng);
    return m;
}

namespace detail {

// zeroes the first latent coordinate: multiply by a constant 0/1 mask
inline Value project_first_latent(Graph& g, Value z, std::size_t rows, std::size_t D) {
    Tensor mask(rows, D, 1.0);
    for (std::size_t r = 0; r < rows; ++r) mask.at(r, 0) = 0.0;
    return g.mul(z, g.input(mask, "fpr_mask"));
}

struct FairChain {
    Value z_all;       // latent before any projection
    Value logdet_all;  // per-row
    Value x_fair;      // f_p^-1 of (possibly projected) latent
};

inline FairChain fair_chain_graph(const FairNFModel& m, Graph& g, Binder& bind, Value x) {
    FlowOut fwd = flow_forward_graph(m.f_all, g, bind, x, "f_all");
    Value chain = fwd.y;
    if (m.variant != FairNFVariant::Base)
        chain = project_first_latent(g, chain, g.value_of(chain).rows, m.D);
    Value x_fair = flow_inverse_graph(m.f_p, g, bind, chain, "f_p");
    return {fwd.y, fwd.logdet, x_fair};
}

}  // namespace detail

inline Tensor fair_transform(const FairNFModel& m, const Tensor& X) {
    if (X.cols != m.D)
        throw StructuralError("fair_transform: expected " + std::to_string(m.D) +
                              " columns, got " + std::to_string(X.cols));
    Graph g;
    Binder bind(g);
    auto chain = detail::fair_chain_graph(m, g, bind, g.input(X, "x"));
    return g.value_of(chain.x_fair);
}

inline Tensor implicit_correction(const FairNFModel& m, const Tensor& X) {
    Tensor fair = fair_transform(m, X);
    Tensor W(X.rows, X.cols);
    for (std::size_t i = 0; i < X.size(); ++i) W.v[i] = fair.v[i] - X.v[i];
    return W;
}

inline double rank_head_forward(const Mlp& g_net, const Tensor& x1, const Tensor& x2) {
    Graph g;
    Binder bind(g);
    Value s1 = g_net.forward(g, bind, g.input(x1, "x1"), "g");
    Value s2 = g_net.forward(g, bind, g.input(x2, "x2"), "g");
    return g.value_of(g.tanh(g.sub(s1, s2))).v[0];
}

struct FairNFTrace {
    std::vector<double> nll_all, nll_pivot, task, latent_bce;
};

/// Joint training: gamma * NLL(f_all, all rows) + gamma * NLL(f_p, pivot rows)
/// + task loss through the full chain (+ latent logistic loss for bce).
/// The predictor sits after the chain so flow losses never touch it, and the
/// task gradients reach f_p through the inverse pass.
inline FairNFTrace train_fairnf(FairNFModel& m, const Dataset& ds, const Tensor& X,
                                const std::vector<RankPair>& pairs,
                                const FairNFConfig& cfg) {
    if (X.rows != ds.n()) throw StructuralError("train_fairnf: row mismatch");
    if (X.cols != m.D) throw StructuralError("train_fairnf: column mismatch");
    if (cfg.epochs < 1) throw ConfigError("train_fairnf: epochs must be >= 1");
    if (m.variant == FairNFVariant::Bce && ds.group_count() > 2)
        throw ConfigError("train_fairnf: bce variant supports binary groups only");
    std::size_t pivot_total = 0;
    for (int g : ds.s)
        if (g == m.pivot_group) ++pivot_total;
    if (pivot_total == 0) throw ConfigError("train_fairnf: pivot group absent");
    if (m.task == TaskKind::Rank && pairs.empty())
        throw ConfigError("train_fairnf: rank task needs pairs");
    if (m.task == TaskKind::Cls)
        for (double v : ds.y)
            if (v != 0.0 && v != 1.0)
                throw ConfigError("train_fairnf: classification targets must be binary");

    Rng shuffle_rng(mix_seed(cfg.seed, 404));
    AdamState opt;
    FairNFTrace trace;
    std::size_t n_units = m.task == TaskKind::Cls ? ds.n() : pairs.size();
    std::vector<std::size_t> idx(n_units);
    std::iota(idx.begin(), idx.end(), 0);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(idx);
        double se_all = 0, se_p = 0, se_task = 0, se_bce = 0;
        std::size_t batches = 0, p_batches = 0, bce_batches = 0;
        for (std::size_t start = 0; start < idx.size(); start += cfg.batch) {
            std::vector<std::size_t> b(idx.begin() + start,
                                       idx.begin() + std::min(idx.size(), start + cfg.batch));
            // rows feeding the flows this step
            std::vector<std::size_t> rows;
            if (m.task == TaskKind::Cls) {
                rows = b;
            } else {
                for (std::size_t p : b) {
                    rows.push_back(pairs[p].i);
                    rows.push_back(pairs[p].j);
                }
            }
            std::vector<std::size_t> pivot_rows;
            for (std::size_t r : rows)
                if (ds.s[r] == m.pivot_group) pivot_rows.push_back(r);

            try {
                Graph g;
                Binder bind(g);
                Tensor Xb = detail::rows_subset(X, rows);
                auto chain = detail::fair_chain_graph(m, g, bind, g.input(Xb, "x"));

                // NLL of f_all on the batch
                Value half_sq = g.scale(g.row_sum(g.square(chain.z_all)), 0.5);
                double c = 0.5 * static_cast<double>(m.D) * std::log(2.0 * std::numbers::pi);
                Value nll_all = g.add_scalar(g.mean(g.sub(half_sq, chain.logdet_all)), c);
                Value total = g.scale(nll_all, cfg.gamma);

                // NLL of f_p on the batch's pivot rows
                Value nll_p;
                if (!pivot_rows.empty()) {
                    Tensor Xp = detail::rows_subset(X, pivot_rows);
                    nll_p = flow_nll_graph(m.f_p, g, bind, g.input(Xp, "xp"), "f_p");
                    total = g.add(total, g.scale(nll_p, cfg.gamma));
                }

                // task loss through the chain
                Value task_loss;
                if (m.task == TaskKind::Cls) {
                    Tensor yb(rows.size(), 1);
                    for (std::size_t r = 0; r < rows.size(); ++r) yb.v[r] = ds.y[rows[r]];
                    Value logits = m.predictor.forward(g, bind, chain.x_fair, "predictor");
                    task_loss = g.bce_with_logits(logits, g.input(yb, "y"));
                } else {
                    // x_fair rows alternate pair members (i at 2k, j at 2k+1);
                    // score each row, then take tanh of alternating differences
                    Value scores = m.predictor.forward(g, bind, chain.x_fair, "predictor");
                    const Tensor& sv = g.value_of(scores);
                    Tensor pick1(b.size(), sv.rows), pick2(b.size(), sv.rows);
                    Tensor target(b.size(), 1);
                    for (std::size_t k = 0; k < b.size(); ++k) {
                        pick1.at(k, 2 * k) = 1.0;
                        pick2.at(k, 2 * k + 1) = 1.0;
                        target.v[k] = 2.0 * pairs[b[k]].dy - 1.0;
                    }
                    Value zerob = g.input(Tensor(1, 1), "zero_b");
                    Value s1 = g.affine(g.input(pick1, "pick1"), scores, zerob);
                    Value s2 = g.affine(g.input(pick2, "pick2"), scores, zerob);
                    Value f = g.tanh(g.sub(s1, s2));
                    task_loss = g.mean(g.square(g.sub(g.input(target, "dy"), f)));
                }
                total = g.add(total, task_loss);

                // latent logistic loss on z1 before deletion
                Value latent_loss;
                if (m.variant == FairNFVariant::Bce) {
                    Value z1 = g.slice_cols(chain.z_all, 0, 1);
                    Value logit = m.bce_readout.forward(g, bind, z1, "bce_readout");
                    Tensor st(rows.size(), 1);
                    for (std::size_t r = 0; r < rows.size(); ++r)
                        st.v[r] = static_cast<double>(ds.s[rows[r]]);
                    latent_loss = g.bce_with_logits(logit, g.input(st, "s"));
                    total = g.add(total, latent_loss);
                }

                g.backward(total);
                adam_step(opt, bind, cfg.lr);

                se_all += g.value_of(nll_all).v[0];
                se_task += g.value_of(task_loss).v[0];
                ++batches;
                if (nll_p.valid()) {
                    se_p += g.value_of(nll_p).v[0];
                    ++p_batches;
                }
                if (latent_loss.valid()) {
                    se_bce += g.value_of(latent_loss).v[0];
                    ++bce_batches;
                }
            } catch (const NumericError& e) {
                throw NumericError("train_fairnf diverged at epoch " +
                                   std::to_string(epoch) + ": " + e.what());
            }
        }
        trace.nll_all.push_back(se_all / batches);
        trace.nll_pivot.push_back(p_batches ? se_p / p_batches : 0.0);
        trace.task.push_back(se_task / batches);
        trace.latent_bce.push_back(bce_batches ? se_bce / bce_batches : 0.0);
    }
    m.trained = true;
    return trace;
}

/// Classification probabilities or ranking scores on the fair representation.
inline std::vector<double> fairnf_predict(const FairNFModel& m, const Tensor& X) {
    Tensor fair = fair_transform(m, X);
    Graph g;
    Binder bind(g);
    Value out = m.predictor.forward(g, bind, g.input(fair, "xf"), "predictor");
    if (m.task == TaskKind::Cls) out = g.sigmoid(out);
    return g.value_of(out).v;
}

/// Latent first-coordinate readout scores (bce variant's adversary view).
inline std::vector<double> fairnf_latent_scores(const FairNFModel& m, const Tensor& X) {
    Graph g;
    Binder bind(g);
    FlowOut fwd = flow_forward_graph(m.f_all, g, bind, g.input(X, "x"), "f_all");
    Value z1 = g.slice_cols(fwd.y, 0, 1);
    Value logit = m.bce_readout.forward(g, bind, z1, "bce_readout");
    return g.value_of(g.sigmoid(logit)).v;
}

}  // namespace corvec
