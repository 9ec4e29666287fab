#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "corvec/errors.hpp"
#include "corvec/tensor.hpp"

namespace corvec {

/// Handle to a node on a Graph tape.
struct Value {
    int id = -1;
    bool valid() const { return id >= 0; }
};

/// Define-by-run reverse-mode tape over dense matrices. Each op computes its
/// forward value at construction; backward() walks the tape in reverse
/// creation order, which is a valid reverse topological order by construction.
class Graph {
public:
    enum class Op {
        Input,
        Param,
        Affine,
        Add,
        Sub,
        Mul,
        Scale,
        AddScalar,
        Tanh,
        Sigmoid,
        Exp,
        Log,
        Square,
        Sum,
        Mean,
        RowSum,
        ConcatCols,
        SliceCols,
        GradReverse,
        BceLogits,
        SoftmaxCE,
    };

    Value input(const Tensor& t, const std::string& name = "input") {
        return leaf(Op::Input, t, name);
    }

    Value param(const Tensor& t, const std::string& name = "param") {
        return leaf(Op::Param, t, name);
    }

    // x:[n,i] w:[i,o] b:[1,o] -> [n,o]
    Value affine(Value x, Value w, Value b) {
        const Tensor& X = val(x);
        const Tensor& W = val(w);
        const Tensor& B = val(b);
        std::string name = node_name("affine");
        if (X.cols != W.rows || B.rows != 1 || B.cols != W.cols)
            throw StructuralError(name + ": shapes " + X.shape_str() + " * " +
                                  W.shape_str() + " + " + B.shape_str());
        Tensor out(X.rows, W.cols);
        for (std::size_t r = 0; r < X.rows; ++r)
            for (std::size_t c = 0; c < W.cols; ++c) {
                double acc = B.v[c];
                for (std::size_t k = 0; k < X.cols; ++k)
                    acc += X.at(r, k) * W.at(k, c);
                out.at(r, c) = acc;
            }
        return push(Op::Affine, {x, w, b}, std::move(out), name);
    }

    Value add(Value a, Value b) { return binary(Op::Add, a, b); }
    Value sub(Value a, Value b) { return binary(Op::Sub, a, b); }
    Value mul(Value a, Value b) { return binary(Op::Mul, a, b); }

    Value scale(Value a, double c) {
        Tensor out = val(a);
        for (double& x : out.v) x *= c;
        Value v = push(Op::Scale, {a}, std::move(out), node_name("scale"));
        nodes_[v.id].c0 = c;
        return v;
    }

    Value add_scalar(Value a, double c) {
        Tensor out = val(a);
        for (double& x : out.v) x += c;
        Value v = push(Op::AddScalar, {a}, std::move(out), node_name("add_scalar"));
        nodes_[v.id].c0 = c;
        return v;
    }

    Value tanh(Value a) {
        return unary(Op::Tanh, a, [](double x) { return std::tanh(x); });
    }

    Value sigmoid(Value a) {
        return unary(Op::Sigmoid, a, [](double x) {
            return x >= 0 ? 1.0 / (1.0 + std::exp(-x))
                          : std::exp(x) / (1.0 + std::exp(x));
        });
    }

    Value exp(Value a) {
        return unary(Op::Exp, a, [](double x) { return std::exp(x); });
    }

    Value log(Value a) {
        return unary(Op::Log, a, [](double x) { return std::log(x); });
    }

    Value square(Value a) {
        return unary(Op::Square, a, [](double x) { return x * x; });
    }

    Value sum(Value a) {
        const Tensor& A = val(a);
        Tensor out(1, 1);
        double acc = 0.0;
        for (double x : A.v) acc += x;
        out.v[0] = acc;
        return push(Op::Sum, {a}, std::move(out), node_name("sum"));
    }

    Value mean(Value a) {
        const Tensor& A = val(a);
        if (A.size() == 0) throw StructuralError("mean: empty tensor");
        Tensor out(1, 1);
        double acc = 0.0;
        for (double x : A.v) acc += x;
        out.v[0] = acc / static_cast<double>(A.size());
        return push(Op::Mean, {a}, std::move(out), node_name("mean"));
    }

    // [n,c] -> [n,1]
    Value row_sum(Value a) {
        const Tensor& A = val(a);
        Tensor out(A.rows, 1);
        for (std::size_t r = 0; r < A.rows; ++r) {
            double acc = 0.0;
            for (std::size_t c = 0; c < A.cols; ++c) acc += A.at(r, c);
            out.v[r] = acc;
        }
        return push(Op::RowSum, {a}, std::move(out), node_name("row_sum"));
    }

    Value concat_cols(Value a, Value b) {
        const Tensor& A = val(a);
        const Tensor& B = val(b);
        std::string name = node_name("concat_cols");
        if (A.rows != B.rows)
            throw StructuralError(name + ": row mismatch " + A.shape_str() + " | " +
                                  B.shape_str());
        Tensor out(A.rows, A.cols + B.cols);
        for (std::size_t r = 0; r < A.rows; ++r) {
            for (std::size_t c = 0; c < A.cols; ++c) out.at(r, c) = A.at(r, c);
            for (std::size_t c = 0; c < B.cols; ++c) out.at(r, A.cols + c) = B.at(r, c);
        }
        return push(Op::ConcatCols, {a, b}, std::move(out), name);
    }

    // columns [c0, c1)
    Value slice_cols(Value a, std::size_t c0, std::size_t c1) {
        const Tensor& A = val(a);
        std::string name = node_name("slice_cols");
        if (c0 >= c1 || c1 > A.cols)
            throw StructuralError(name + ": bad range [" + std::to_string(c0) + "," +
                                  std::to_string(c1) + ") of " + A.shape_str());
        Tensor out(A.rows, c1 - c0);
        for (std::size_t r = 0; r < A.rows; ++r)
            for (std::size_t c = c0; c < c1; ++c) out.at(r, c - c0) = A.at(r, c);
        Value v = push(Op::SliceCols, {a}, std::move(out), name);
        nodes_[v.id].i0 = c0;
        nodes_[v.id].i1 = c1;
        return v;
    }

    // Forward identity; backward multiplies the incoming gradient by -lambda.
    Value grad_reverse(Value a, double lambda) {
        if (!(lambda > 0.0))
            throw ConfigError("grad_reverse: lambda must be > 0, got " +
                              std::to_string(lambda));
        Tensor out = val(a);
        Value v = push(Op::GradReverse, {a}, std::move(out), node_name("grad_reverse"));
        nodes_[v.id].c0 = lambda;
        return v;
    }

    // Mean binary cross entropy on logits, numerically stable. targets in [0,1].
    Value bce_with_logits(Value logits, Value targets) {
        const Tensor& L = val(logits);
        const Tensor& T = val(targets);
        std::string name = node_name("bce_logits");
        if (!L.same_shape(T))
            throw StructuralError(name + ": shape mismatch " + L.shape_str() + " vs " +
                                  T.shape_str());
        Tensor out(1, 1);
        double acc = 0.0;
        for (std::size_t i = 0; i < L.size(); ++i) {
            double l = L.v[i], t = T.v[i];
            acc += std::max(l, 0.0) - l * t + std::log1p(std::exp(-std::abs(l)));
        }
        out.v[0] = acc / static_cast<double>(L.size());
        return push(Op::BceLogits, {logits, targets}, std::move(out), name);
    }

    // Mean cross entropy of row-wise softmax(logits) against one-hot targets.
    Value softmax_cross_entropy(Value logits, Value onehot) {
        const Tensor& L = val(logits);
        const Tensor& T = val(onehot);
        std::string name = node_name("softmax_ce");
        if (!L.same_shape(T))
            throw StructuralError(name + ": shape mismatch " + L.shape_str() + " vs " +
                                  T.shape_str());
        Tensor out(1, 1);
        double acc = 0.0;
        for (std::size_t r = 0; r < L.rows; ++r) {
            double mx = L.at(r, 0);
            for (std::size_t c = 1; c < L.cols; ++c) mx = std::max(mx, L.at(r, c));
            double lse = 0.0;
            for (std::size_t c = 0; c < L.cols; ++c) lse += std::exp(L.at(r, c) - mx);
            lse = mx + std::log(lse);
            for (std::size_t c = 0; c < L.cols; ++c)
                acc += T.at(r, c) * (lse - L.at(r, c));
        }
        out.v[0] = acc / static_cast<double>(L.rows);
        return push(Op::SoftmaxCE, {logits, onehot}, std::move(out), name);
    }

    const Tensor& value_of(Value v) const { return val(v); }

    const std::vector<double>& grad_of(Value v) const {
        check(v);
        return nodes_[v.id].value.grad;
    }

    Tensor grad_tensor(Value v) const {
        check(v);
        const Tensor& t = nodes_[v.id].value;
        Tensor g(t.rows, t.cols);
        g.v = t.grad;
        return g;
    }

    const std::string& name_of(Value v) const {
        check(v);
        return nodes_[v.id].name;
    }

    std::size_t node_count() const { return nodes_.size(); }

    /// Populate grad slots of every node reachable from `loss` (all nodes on the
    /// tape). Repeated calls re-seed from zero, so results are reproducible.
    void backward(Value loss) {
        check(loss);
        Node& top = nodes_[loss.id];
        if (top.value.size() != 1)
            throw StructuralError("backward: loss node '" + top.name +
                                  "' is not scalar (" + top.value.shape_str() + ")");
        for (Node& n : nodes_) n.value.grad.assign(n.value.size(), 0.0);
        top.value.grad[0] = 1.0;
        for (int id = loss.id; id >= 0; --id) backprop_node(id);
    }

private:
    struct Node {
        Op op;
        std::vector<int> in;
        Tensor value;
        std::string name;
        double c0 = 0.0;      // scalar constant / lambda
        std::size_t i0 = 0;   // slice range
        std::size_t i1 = 0;
    };

    std::vector<Node> nodes_;

    void check(Value v) const {
        if (v.id < 0 || v.id >= static_cast<int>(nodes_.size()))
            throw StructuralError("invalid Value handle");
    }

    const Tensor& val(Value v) const {
        check(v);
        return nodes_[v.id].value;
    }

    std::string node_name(const char* op) const {
        return std::string(op) + "#" + std::to_string(nodes_.size());
    }

    Value leaf(Op op, const Tensor& t, const std::string& name) {
        Node n;
        n.op = op;
        n.value = t;
        n.name = name;
        if (!n.value.all_finite())
            throw NumericError("node '" + name + "': non-finite input values");
        nodes_.push_back(std::move(n));
        return Value{static_cast<int>(nodes_.size()) - 1};
    }

    Value push(Op op, std::vector<Value> ins, Tensor out, std::string name) {
        if (!out.all_finite())
            throw NumericError("node '" + name + "': non-finite output");
        Node n;
        n.op = op;
        n.in.reserve(ins.size());
        for (Value v : ins) {
            check(v);
            n.in.push_back(v.id);
        }
        n.value = std::move(out);
        n.name = std::move(name);
        nodes_.push_back(std::move(n));
        return Value{static_cast<int>(nodes_.size()) - 1};
    }

    template <typename F>
    Value unary(Op op, Value a, F f) {
        Tensor out = val(a);
        for (double& x : out.v) x = f(x);
        const char* tag = op == Op::Tanh      ? "tanh"
                          : op == Op::Sigmoid ? "sigmoid"
                          : op == Op::Exp     ? "exp"
                          : op == Op::Log     ? "log"
                                              : "square";
        return push(op, {a}, std::move(out), node_name(tag));
    }

    Value binary(Op op, Value a, Value b) {
        const Tensor& A = val(a);
        const Tensor& B = val(b);
        const char* tag = op == Op::Add ? "add" : op == Op::Sub ? "sub" : "mul";
        std::string name = node_name(tag);
        if (!A.same_shape(B))
            throw StructuralError(name + ": shape mismatch " + A.shape_str() + " vs " +
                                  B.shape_str());
        Tensor out(A.rows, A.cols);
        for (std::size_t i = 0; i < A.size(); ++i)
            out.v[i] = op == Op::Add   ? A.v[i] + B.v[i]
                       : op == Op::Sub ? A.v[i] - B.v[i]
                                       : A.v[i] * B.v[i];
        return push(op, {a, b}, std::move(out), name);
    }

    void backprop_node(int id) {
        Node& n = nodes_[id];
        const std::vector<double>& g = n.value.grad;
        auto in_val = [&](int k) -> Tensor& { return nodes_[n.in[k]].value; };
        switch (n.op) {
            case Op::Input:
            case Op::Param:
                break;
            case Op::Affine: {
                Tensor& X = in_val(0);
                Tensor& W = in_val(1);
                Tensor& B = in_val(2);
                for (std::size_t r = 0; r < X.rows; ++r)
                    for (std::size_t k = 0; k < X.cols; ++k) {
                        double acc = 0.0;
                        for (std::size_t c = 0; c < W.cols; ++c)
                            acc += g[r * W.cols + c] * W.at(k, c);
                        X.grad[r * X.cols + k] += acc;
                    }
                for (std::size_t k = 0; k < W.rows; ++k)
                    for (std::size_t c = 0; c < W.cols; ++c) {
                        double acc = 0.0;
                        for (std::size_t r = 0; r < X.rows; ++r)
                            acc += X.at(r, k) * g[r * W.cols + c];
                        W.grad[k * W.cols + c] += acc;
                    }
                for (std::size_t c = 0; c < B.cols; ++c) {
                    double acc = 0.0;
                    for (std::size_t r = 0; r < X.rows; ++r) acc += g[r * B.cols + c];
                    B.grad[c] += acc;
                }
                break;
            }
            case Op::Add: {
                Tensor& A = in_val(0);
                Tensor& B = in_val(1);
                for (std::size_t i = 0; i < g.size(); ++i) {
                    A.grad[i] += g[i];
                    B.grad[i] += g[i];
                }
                break;
            }
            case Op::Sub: {
                Tensor& A = in_val(0);
                Tensor& B = in_val(1);
                for (std::size_t i = 0; i < g.size(); ++i) {
                    A.grad[i] += g[i];
                    B.grad[i] -= g[i];
                }
                break;
            }
            case Op::Mul: {
                Tensor& A = in_val(0);
                Tensor& B = in_val(1);
                for (std::size_t i = 0; i < g.size(); ++i) {
                    A.grad[i] += g[i] * B.v[i];
                    B.grad[i] += g[i] * A.v[i];
                }
                break;
            }
            case Op::Scale: {
                Tensor& A = in_val(0);
                for (std::size_t i = 0; i < g.size(); ++i) A.grad[i] += n.c0 * g[i];
                break;
            }
            case Op::AddScalar: {
                Tensor& A = in_val(0);
                for (std::size_t i = 0; i < g.size(); ++i) A.grad[i] += g[i];
                break;
            }
            case Op::Tanh: {
                Tensor& A = in_val(0);
                for (std::size_t i = 0; i < g.size(); ++i)
                    A.grad[i] += g[i] * (1.0 - n.value.v[i] * n.value.v[i]);
                break;
            }
            case Op::Sigmoid: {
                Tensor& A = in_val(0);
                for (std::size_t i = 0; i < g.size(); ++i)
                    A.grad[i] += g[i] * n.value.v[i] * (1.0 - n.value.v[i]);
                break;
            }
            case Op::Exp: {
                Tensor& A = in_val(0);
                for (std::size_t i = 0; i < g.size(); ++i) A.grad[i] += g[i] * n.value.v[i];
                break;
            }
            case Op::Log: {
                Tensor& A = in_val(0);
                for (std::size_t i = 0; i < g.size(); ++i) A.grad[i] += g[i] / A.v[i];
                break;
            }
            case Op::Square: {
                Tensor& A = in_val(0);
                for (std::size_t i = 0; i < g.size(); ++i)
                    A.grad[i] += g[i] * 2.0 * A.v[i];
                break;
            }
            case Op::Sum: {
                Tensor& A = in_val(0);
                for (std::size_t i = 0; i < A.size(); ++i) A.grad[i] += g[0];
                break;
            }
            case Op::Mean: {
                Tensor& A = in_val(0);
                double s = g[0] / static_cast<double>(A.size());
                for (std::size_t i = 0; i < A.size(); ++i) A.grad[i] += s;
                break;
            }
            case Op::RowSum: {
                Tensor& A = in_val(0);
                for (std::size_t r = 0; r < A.rows; ++r)
                    for (std::size_t c = 0; c < A.cols; ++c)
                        A.grad[r * A.cols + c] += g[r];
                break;
            }
            case Op::ConcatCols: {
                Tensor& A = in_val(0);
                Tensor& B = in_val(1);
                for (std::size_t r = 0; r < A.rows; ++r) {
                    for (std::size_t c = 0; c < A.cols; ++c)
                        A.grad[r * A.cols + c] += g[r * n.value.cols + c];
                    for (std::size_t c = 0; c < B.cols; ++c)
                        B.grad[r * B.cols + c] += g[r * n.value.cols + A.cols + c];
                }
                break;
            }
            case Op::SliceCols: {
                Tensor& A = in_val(0);
                for (std::size_t r = 0; r < n.value.rows; ++r)
                    for (std::size_t c = 0; c < n.value.cols; ++c)
                        A.grad[r * A.cols + n.i0 + c] += g[r * n.value.cols + c];
                break;
            }
            case Op::GradReverse: {
                Tensor& A = in_val(0);
                for (std::size_t i = 0; i < g.size(); ++i) A.grad[i] += -n.c0 * g[i];
                break;
            }
            case Op::BceLogits: {
                Tensor& L = in_val(0);
                Tensor& T = in_val(1);
                double s = g[0] / static_cast<double>(L.size());
                for (std::size_t i = 0; i < L.size(); ++i) {
                    double l = L.v[i];
                    double sig = l >= 0 ? 1.0 / (1.0 + std::exp(-l))
                                        : std::exp(l) / (1.0 + std::exp(l));
                    L.grad[i] += s * (sig - T.v[i]);
                    T.grad[i] += s * -l;
                }
                break;
            }
            case Op::SoftmaxCE: {
                Tensor& L = in_val(0);
                Tensor& T = in_val(1);
                double s = g[0] / static_cast<double>(L.rows);
                for (std::size_t r = 0; r < L.rows; ++r) {
                    double mx = L.at(r, 0);
                    for (std::size_t c = 1; c < L.cols; ++c) mx = std::max(mx, L.at(r, c));
                    double lse = 0.0;
                    for (std::size_t c = 0; c < L.cols; ++c)
                        lse += std::exp(L.at(r, c) - mx);
                    double logz = mx + std::log(lse);
                    double tsum = 0.0;
                    for (std::size_t c = 0; c < L.cols; ++c) tsum += T.at(r, c);
                    for (std::size_t c = 0; c < L.cols; ++c) {
                        double p = std::exp(L.at(r, c) - logz);
                        L.grad[r * L.cols + c] += s * (tsum * p - T.at(r, c));
                        T.grad[r * L.cols + c] += s * (logz - L.at(r, c));
                    }
                }
                break;
            }
        }
    }
};

}  // namespace corvec
