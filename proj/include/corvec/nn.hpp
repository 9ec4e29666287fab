#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "corvec/errors.hpp"
#include "corvec/graph.hpp"
#include "corvec/rng.hpp"
#include "corvec/tensor.hpp"

namespace corvec {

enum class Act { None, Tanh, Sigmoid };

inline Value apply_act(Graph& g, Value v, Act a) {
    switch (a) {
        case Act::Tanh: return g.tanh(v);
        case Act::Sigmoid: return g.sigmoid(v);
        default: return v;
    }
}

struct Linear {
    Tensor w, b;

    Linear() = default;

    Linear(std::size_t in, std::size_t out, Rng& rng, bool zero_init = false)
        : w(in, out), b(1, out) {
        if (!zero_init) {
            double lim = std::sqrt(6.0 / static_cast<double>(in + out));
            for (double& x : w.v) x = rng.uniform(-lim, lim);
        }
    }

    Value forward(Graph& g, class Binder& bind, Value x, const std::string& prefix) const;
};

/// Registers parameter tensors on a graph for one forward/backward pass and
/// remembers where they live so the optimizer can read gradients back.
/// Binding the same tensor again (shared weights across branches) returns the
/// original node so its gradient accumulates in one place.
class Binder {
public:
    explicit Binder(Graph& g) : g_(&g) {}

    Value bind(Tensor& t, std::string name) {
        auto it = index_.find(&t);
        if (it != index_.end()) return entries_[it->second].v;
        Value v = g_->param(t, name);
        index_[&t] = entries_.size();
        entries_.push_back({&t, v, std::move(name)});
        return v;
    }

    std::size_t count() const { return entries_.size(); }
    Tensor& tensor(std::size_t i) { return *entries_[i].t; }
    const std::vector<double>& grad(std::size_t i) const {
        return g_->grad_of(entries_[i].v);
    }
    const std::string& name(std::size_t i) const { return entries_[i].name; }
    Graph& graph() { return *g_; }

private:
    struct Entry {
        Tensor* t;
        Value v;
        std::string name;
    };
    Graph* g_;
    std::vector<Entry> entries_;
    std::map<Tensor*, std::size_t> index_;
};

inline Value Linear::forward(Graph& g, Binder& bind, Value x,
                             const std::string& prefix) const {
    Value wv = bind.bind(const_cast<Tensor&>(w), prefix + ".w");
    Value bv = bind.bind(const_cast<Tensor&>(b), prefix + ".b");
    return g.affine(x, wv, bv);
}

struct Mlp {
    std::vector<Linear> layers;
    Act hidden = Act::Tanh;
    Act out = Act::None;

    Mlp() = default;

    // dims = {in, h1, ..., out}; zero_last zero-initializes the final layer so
    // the net starts out as the constant-zero map.
    Mlp(const std::vector<std::size_t>& dims, Act hidden_act, Act out_act, Rng& rng,
        bool zero_last = false)
        : hidden(hidden_act), out(out_act) {
        if (dims.size() < 2) throw ConfigError("Mlp: need at least in and out dims");
        for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
            bool zero = zero_last && i + 2 == dims.size();
            layers.emplace_back(dims[i], dims[i + 1], rng, zero);
        }
    }

    Value forward(Graph& g, Binder& bind, Value x, const std::string& prefix) const {
        Value h = x;
        for (std::size_t i = 0; i < layers.size(); ++i) {
            h = layers[i].forward(g, bind, h, prefix + ".l" + std::to_string(i));
            h = apply_act(g, h, i + 1 < layers.size() ? hidden : out);
        }
        return h;
    }

    std::size_t in_dim() const { return layers.front().w.rows; }
    std::size_t out_dim() const { return layers.back().w.cols; }

    std::vector<Tensor*> params() {
        std::vector<Tensor*> ps;
        for (Linear& l : layers) {
            ps.push_back(&l.w);
            ps.push_back(&l.b);
        }
        return ps;
    }
};

struct AdamState {
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    long step = 0;
    std::vector<std::vector<double>> m, v;
};

/// One Adam update over every parameter registered on `bind`. Call after
/// Graph::backward. Parameter registration order must be stable across steps.
inline void adam_step(AdamState& st, Binder& bind, double lr) {
    if (st.m.empty()) {
        st.m.resize(bind.count());
        st.v.resize(bind.count());
        for (std::size_t i = 0; i < bind.count(); ++i) {
            st.m[i].assign(bind.tensor(i).size(), 0.0);
            st.v[i].assign(bind.tensor(i).size(), 0.0);
        }
    }
    if (st.m.size() != bind.count())
        throw StructuralError("adam_step: parameter count changed between steps");
    st.step += 1;
    double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
    double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));
    for (std::size_t i = 0; i < bind.count(); ++i) {
        Tensor& t = bind.tensor(i);
        const std::vector<double>& g = bind.grad(i);
        if (g.size() != t.size())
            throw StructuralError("adam_step: missing gradient for " + bind.name(i));
        for (std::size_t j = 0; j < g.size(); ++j) {
            if (!std::isfinite(g[j]))
                throw NumericError("adam_step: non-finite gradient in " + bind.name(i));
            st.m[i][j] = st.beta1 * st.m[i][j] + (1.0 - st.beta1) * g[j];
            st.v[i][j] = st.beta2 * st.v[i][j] + (1.0 - st.beta2) * g[j] * g[j];
            double mhat = st.m[i][j] / bc1;
            double vhat = st.v[i][j] / bc2;
            t.v[j] -= lr * mhat / (std::sqrt(vhat) + st.eps);
        }
    }
}

}  // namespace corvec
