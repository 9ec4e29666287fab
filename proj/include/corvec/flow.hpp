#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include "corvec/errors.hpp"
#include "corvec/graph.hpp"
#include "corvec/nn.hpp"
#include "corvec/rng.hpp"
#include "corvec/tensor.hpp"

namespace corvec {

inline constexpr double kScaleClamp = 5.0;

/// Affine coupling: one block of columns passes through unchanged and drives
/// two subnets whose outputs scale and shift the other block. Scale outputs
/// run through a smooth clamp so exp never overflows. Final subnet layers
/// start at zero, making a fresh layer the exact identity.
struct CouplingLayer {
    std::size_t D = 0;
    std::size_t d = 0;   // size of the invariant block
    bool flip = false;   // false: first d columns invariant; true: last d
    Mlp scale_net, shift_net;

    CouplingLayer() = default;

    CouplingLayer(std::size_t dim, bool flipped, const std::vector<std::size_t>& hidden,
                  Rng& rng)
        : D(dim), d((dim + 1) / 2), flip(flipped) {
        if (dim < 2) throw ConfigError("CouplingLayer: need D >= 2");
        std::vector<std::size_t> dims = {d};
        dims.insert(dims.end(), hidden.begin(), hidden.end());
        dims.push_back(D - d);
        scale_net = Mlp(dims, Act::Tanh, Act::None, rng, true);
        shift_net = Mlp(dims, Act::Tanh, Act::None, rng, true);
    }

    std::vector<Tensor*> params() {
        std::vector<Tensor*> ps = scale_net.params();
        for (Tensor* t : shift_net.params()) ps.push_back(t);
        return ps;
    }
};

namespace detail {

struct CouplingBlocks {
    Value keep, moved;
};

inline CouplingBlocks split_blocks(const CouplingLayer& l, Graph& g, Value x) {
    if (l.flip) return {g.slice_cols(x, l.D - l.d, l.D), g.slice_cols(x, 0, l.D - l.d)};
    return {g.slice_cols(x, 0, l.d), g.slice_cols(x, l.d, l.D)};
}

inline Value join_blocks(const CouplingLayer& l, Graph& g, Value keep, Value moved) {
    return l.flip ? g.concat_cols(moved, keep) : g.concat_cols(keep, moved);
}

inline Value clamped_scale(Graph& g, Value raw) {
    return g.scale(g.tanh(g.scale(raw, 1.0 / kScaleClamp)), kScaleClamp);
}

}  // namespace detail

struct CouplingOut {
    Value y;
    Value logdet;  // n x 1
};

inline CouplingOut coupling_forward_graph(const CouplingLayer& l, Graph& g, Binder& bind,
                                          Value x, const std::string& prefix) {
    auto blocks = detail::split_blocks(l, g, x);
    Value s = detail::clamped_scale(g, l.scale_net.forward(g, bind, blocks.keep, prefix + ".s"));
    Value t = l.shift_net.forward(g, bind, blocks.keep, prefix + ".t");
    Value moved = g.add(g.mul(blocks.moved, g.exp(s)), t);
    return {detail::join_blocks(l, g, blocks.keep, moved), g.row_sum(s)};
}

inline Value coupling_inverse_graph(const CouplingLayer& l, Graph& g, Binder& bind, Value y,
                                    const std::string& prefix) {
    auto blocks = detail::split_blocks(l, g, y);
    Value s = detail::clamped_scale(g, l.scale_net.forward(g, bind, blocks.keep, prefix + ".s"));
    Value t = l.shift_net.forward(g, bind, blocks.keep, prefix + ".t");
    Value moved = g.mul(g.sub(blocks.moved, t), g.exp(g.scale(s, -1.0)));
    return detail::join_blocks(l, g, blocks.keep, moved);
}

/// A stack of coupling layers with alternating invariant halves.
struct FlowStack {
    std::size_t D = 0;
    std::vector<CouplingLayer> layers;

    std::vector<Tensor*> params() {
        std::vector<Tensor*> ps;
        for (CouplingLayer& l : layers)
            for (Tensor* t : l.params()) ps.push_back(t);
        return ps;
    }
};

inline FlowStack make_flow(std::size_t D, std::size_t n_layers,
                           const std::vector<std::size_t>& hidden, Rng& rng) {
    if (D < 2)
        throw ConfigError("make_flow: coupling layers need D >= 2, got " +
                          std::to_string(D));
    if (n_layers < 1) throw ConfigError("make_flow: need at least one layer");
    FlowStack f;
    f.D = D;
    for (std::size_t i = 0; i < n_layers; ++i)
        f.layers.emplace_back(D, i % 2 == 1, hidden, rng);
    return f;
}

inline FlowStack make_flow(std::size_t D, Rng& rng) {
    return make_flow(D, 8, {16, 16}, rng);
}

struct FlowOut {
    Value y;
    Value logdet;  // n x 1, summed over layers
};

inline FlowOut flow_forward_graph(const FlowStack& f, Graph& g, Binder& bind, Value x,
                                  const std::string& prefix) {
    Value h = x;
    Value logdet;
    for (std::size_t i = 0; i < f.layers.size(); ++i) {
        CouplingOut out = coupling_forward_graph(f.layers[i], g, bind, h,
                                                 prefix + ".c" + std::to_string(i));
        h = out.y;
        logdet = i == 0 ? out.logdet : g.add(logdet, out.logdet);
    }
    return {h, logdet};
}

inline Value flow_inverse_graph(const FlowStack& f, Graph& g, Binder& bind, Value y,
                                const std::string& prefix) {
    Value h = y;
    for (std::size_t i = f.layers.size(); i-- > 0;)
        h = coupling_inverse_graph(f.layers[i], g, bind, h,
                                   prefix + ".c" + std::to_string(i));
    return h;
}

// plain-tensor convenience wrappers (throwaway graph, no backward)

struct FlowResult {
    Tensor Y;
    std::vector<double> logdet;
};

inline FlowResult flow_forward(const FlowStack& f, const Tensor& X) {
    Graph g;
    Binder bind(g);
    FlowOut out = flow_forward_graph(f, g, bind, g.input(X, "x"), "flow");
    return {g.value_of(out.y), g.value_of(out.logdet).v};
}

inline Tensor flow_inverse(const FlowStack& f, const Tensor& Y) {
    Graph g;
    Binder bind(g);
    return g.value_of(flow_inverse_graph(f, g, bind, g.input(Y, "y"), "flow"));
}

/// Per-row loss ||F(x)||^2/2 + (D/2) log(2pi) - logdet, averaged over rows:
/// the negative log density under a D-dimensional standard Gaussian base.
inline Value flow_nll_graph(const FlowStack& f, Graph& g, Binder& bind, Value x,
                            const std::string& prefix) {
    FlowOut out = flow_forward_graph(f, g, bind, x, prefix);
    Value half_sq = g.scale(g.row_sum(g.square(out.y)), 0.5);
    Value rows = g.sub(half_sq, out.logdet);
    double c = 0.5 * static_cast<double>(f.D) * std::log(2.0 * std::numbers::pi);
    return g.add_scalar(g.mean(rows), c);
}

inline double flow_nll(const FlowStack& f, const Tensor& X) {
    if (X.rows == 0) throw StructuralError("flow_nll: empty input");
    Graph g;
    Binder bind(g);
    return g.value_of(flow_nll_graph(f, g, bind, g.input(X, "x"), "flow")).v[0];
}

/// Maximum-likelihood training of a lone stack (no predictor attached).
/// Returns the full-data NLL after each epoch.
inline std::vector<double> train_flow(FlowStack& f, const Tensor& X, int epochs, double lr,
                                      std::size_t batch, std::uint64_t seed) {
    if (epochs < 1) throw ConfigError("train_flow: epochs must be >= 1");
    Rng shuffle_rng(mix_seed(seed, 303));
    AdamState opt;
    std::vector<std::size_t> idx(X.rows);
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<double> curve;
    for (int epoch = 0; epoch < epochs; ++epoch) {
        shuffle_rng.shuffle(idx);
        for (std::size_t start = 0; start < idx.size(); start += batch) {
            std::size_t end = std::min(idx.size(), start + batch);
            Tensor Xb(end - start, X.cols);
            for (std::size_t r = start; r < end; ++r)
                for (std::size_t c = 0; c < X.cols; ++c)
                    Xb.at(r - start, c) = X.at(idx[r], c);
            try {
                Graph g;
                Binder bind(g);
                Value loss = flow_nll_graph(f, g, bind, g.input(Xb, "x"), "flow");
                g.backward(loss);
                adam_step(opt, bind, lr);
            } catch (const NumericError& e) {
                throw NumericError("train_flow diverged at epoch " +
                                   std::to_string(epoch) + ": " + e.what());
            }
        }
        curve.push_back(flow_nll(f, X));
    }
    return curve;
}

}  // namespace corvec
