#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "corvec/finite_diff.hpp"
#include "corvec/graph.hpp"
#include "corvec/nn.hpp"
#include "corvec/rng.hpp"
#include "corvec/tensor.hpp"

using namespace corvec;

TEST_CASE("affine with identity weight and zero bias is identity") {
    Graph g;
    Value x = g.input(Tensor::row_vector({1.0, 2.0}));
    Tensor w(2, 2);
    w.at(0, 0) = 1.0;
    w.at(1, 1) = 1.0;
    Value wv = g.param(w, "w");
    Value bv = g.param(Tensor(1, 2), "b");
    Value y = g.affine(x, wv, bv);
    CHECK(g.value_of(y).v == std::vector<double>{1.0, 2.0});
}

TEST_CASE("tanh fixed point at zero") {
    Graph g;
    Value y = g.tanh(g.input(Tensor::row_vector({0.0})));
    CHECK(g.value_of(y).v[0] == 0.0);
}

TEST_CASE("two layer mlp forward matches straight-line arithmetic") {
    Rng rng(0);
    Mlp net({2, 3, 1}, Act::Tanh, Act::None, rng);
    Tensor x = Tensor::row_vector({0.5, -0.5});

    Graph g;
    Binder bind(g);
    Value out = net.forward(g, bind, g.input(x), "net");
    double got = g.value_of(out).v[0];

    // same arithmetic, written out longhand
    double h[3];
    for (int j = 0; j < 3; ++j) {
        double a = net.layers[0].b.v[j];
        for (int i = 0; i < 2; ++i) a += x.v[i] * net.layers[0].w.at(i, j);
        h[j] = std::tanh(a);
    }
    double want = net.layers[1].b.v[0];
    for (int j = 0; j < 3; ++j) want += h[j] * net.layers[1].w.at(j, 0);

    CHECK(got == want);
}

TEST_CASE("backward of identity scalar gives grad one") {
    Graph g;
    Value x = g.input(Tensor::row_vector({4.2}));
    g.backward(x);
    CHECK(g.grad_of(x)[0] == 1.0);
}

TEST_CASE("backward of sum of squares") {
    Graph g;
    Value x = g.input(Tensor::row_vector({1.0, -2.0}));
    Value loss = g.sum(g.square(x));
    g.backward(loss);
    CHECK(g.grad_of(x) == std::vector<double>{2.0, -4.0});
}

TEST_CASE("backward rejects non-scalar loss") {
    Graph g;
    Value x = g.input(Tensor::row_vector({1.0, 2.0}));
    CHECK_THROWS_AS(g.backward(x), StructuralError);
}

TEST_CASE("shape mismatch names the node") {
    Graph g;
    Value a = g.input(Tensor::row_vector({1.0, 2.0}));
    Value b = g.input(Tensor::row_vector({1.0}));
    CHECK_THROWS_WITH(g.add(a, b), Catch::Matchers::ContainsSubstring("add#"));
}

TEST_CASE("non-finite forward output raises numeric error") {
    Graph g;
    Value x = g.input(Tensor::row_vector({0.0}));
    CHECK_THROWS_AS(g.log(x), NumericError);
}

static std::vector<std::vector<double>> collect_grads(Binder& bind) {
    std::vector<std::vector<double>> gs;
    for (std::size_t i = 0; i < bind.count(); ++i) gs.push_back(bind.grad(i));
    return gs;
}

TEST_CASE("mlp parameter gradients match central finite differences") {
    Rng rng(7);
    Mlp net({3, 4, 1}, Act::Tanh, Act::None, rng);
    Tensor x(5, 3);
    for (double& v : x.v) v = rng.normal();
    Tensor t(5, 1);
    for (double& v : t.v) v = rng.uniform() < 0.5 ? 0.0 : 1.0;

    auto loss_value = [&]() {
        Graph g;
        Binder bind(g);
        Value out = net.forward(g, bind, g.input(x), "net");
        Value loss = g.bce_with_logits(out, g.input(t));
        return g.value_of(loss).v[0];
    };

    Graph g;
    Binder bind(g);
    Value out = net.forward(g, bind, g.input(x), "net");
    Value loss = g.bce_with_logits(out, g.input(t));
    g.backward(loss);

    auto res = finite_difference_check(loss_value, net.params(), collect_grads(bind));
    INFO(res.worst);
    CHECK(res.max_rel_err < 1e-4);
}

TEST_CASE("grad_reverse forward is exact identity") {
    Graph g;
    Value x = g.input(Tensor::row_vector({3.0, -1.5}));
    Value y = g.grad_reverse(x, 1.0);
    CHECK(g.value_of(y).v == std::vector<double>{3.0, -1.5});
}

TEST_CASE("grad_reverse of sum gives negated ones") {
    Graph g;
    Value x = g.input(Tensor::row_vector({0.3, 0.7}));
    Value loss = g.sum(g.grad_reverse(x, 1.0));
    g.backward(loss);
    CHECK(g.grad_of(x) == std::vector<double>{-1.0, -1.0});
}

TEST_CASE("grad_reverse rejects non-positive lambda") {
    Graph g;
    Value x = g.input(Tensor::row_vector({1.0}));
    CHECK_THROWS_AS(g.grad_reverse(x, 0.0), ConfigError);
    CHECK_THROWS_AS(g.grad_reverse(x, -1.0), ConfigError);
}

TEST_CASE("grad_reverse scales upstream gradients by minus lambda, downstream intact") {
    Rng rng(11);
    Mlp extractor({2, 3, 2}, Act::Tanh, Act::Tanh, rng);
    Mlp head({2, 3, 1}, Act::Tanh, Act::None, rng);
    Tensor x(4, 2);
    for (double& v : x.v) v = rng.normal();
    double lambda = 0.5;

    auto run = [&](bool reversed) {
        Graph g;
        Binder bind(g);
        Value h = extractor.forward(g, bind, g.input(x), "ext");
        if (reversed) h = g.grad_reverse(h, lambda);
        Value loss = g.mean(g.square(head.forward(g, bind, h, "head")));
        g.backward(loss);
        return collect_grads(bind);
    };

    auto plain = run(false);
    auto rev = run(true);
    REQUIRE(plain.size() == rev.size());
    std::size_t n_ext = extractor.params().size();
    for (std::size_t i = 0; i < plain.size(); ++i)
        for (std::size_t j = 0; j < plain[i].size(); ++j) {
            double want = i < n_ext ? -lambda * plain[i][j] : plain[i][j];
            CHECK_THAT(rev[i][j], Catch::Matchers::WithinAbs(want, 1e-12));
        }

    // and the un-reversed gradients themselves agree with finite differences
    auto loss_value = [&]() {
        Graph g;
        Binder bind(g);
        Value h = extractor.forward(g, bind, g.input(x), "ext");
        return g.value_of(g.mean(g.square(head.forward(g, bind, h, "head")))).v[0];
    };
    std::vector<Tensor*> all = extractor.params();
    for (Tensor* t : head.params()) all.push_back(t);
    auto res = finite_difference_check(loss_value, all, plain);
    INFO(res.worst);
    CHECK(res.max_rel_err < 1e-4);
}

TEST_CASE("adam with zero gradient leaves parameters and moments untouched") {
    Tensor p = Tensor::row_vector({1.0, -2.0});
    Graph g;
    Binder bind(g);
    Value pv = bind.bind(p, "p");
    Value loss = g.mean(g.scale(pv, 0.0));
    g.backward(loss);
    AdamState st;
    adam_step(st, bind, 0.1);
    CHECK(p.v == std::vector<double>{1.0, -2.0});
    CHECK(st.step == 1);
    CHECK(st.m[0] == std::vector<double>(2, 0.0));
    CHECK(st.v[0] == std::vector<double>(2, 0.0));
}

TEST_CASE("adam first step moves by lr in the gradient sign direction") {
    Tensor p = Tensor::row_vector({2.0});
    Graph g;
    Binder bind(g);
    Value pv = bind.bind(p, "p");
    Value loss = g.sum(g.scale(pv, 3.0));  // grad = 3
    g.backward(loss);
    AdamState st;
    adam_step(st, bind, 0.1);
    // bias-corrected m-hat/sqrt(v-hat) = g/|g| on the first step
    CHECK_THAT(p.v[0], Catch::Matchers::WithinAbs(2.0 - 0.1 * 3.0 / (3.0 + st.eps), 1e-15));
}

TEST_CASE("adam on theta squared matches a hand-rolled oracle and decreases") {
    double theta = 1.0;
    double m = 0.0, v = 0.0;
    std::vector<double> oracle;
    for (int t = 1; t <= 10; ++t) {
        double grad = 2.0 * theta;
        m = 0.9 * m + 0.1 * grad;
        v = 0.999 * v + 0.001 * grad * grad;
        double mhat = m / (1.0 - std::pow(0.9, t));
        double vhat = v / (1.0 - std::pow(0.999, t));
        theta -= 0.1 * mhat / (std::sqrt(vhat) + 1e-8);
        oracle.push_back(theta);
    }

    Tensor p = Tensor::row_vector({1.0});
    AdamState st;
    double prev = 1.0;
    for (int t = 0; t < 10; ++t) {
        Graph g;
        Binder bind(g);
        Value pv = bind.bind(p, "theta");
        Value loss = g.sum(g.square(pv));
        g.backward(loss);
        adam_step(st, bind, 0.1);
        CHECK_THAT(p.v[0], Catch::Matchers::WithinAbs(oracle[t], 1e-14));
        CHECK(std::abs(p.v[0]) < std::abs(prev));
        prev = p.v[0];
    }
}

TEST_CASE("adam raises numeric error naming the parameter on non-finite grad") {
    Tensor p = Tensor::row_vector({1.0});
    Graph g;
    Binder bind(g);
    Value pv = bind.bind(p, "weights.w");
    Value loss = g.sum(pv);
    g.backward(loss);
    const_cast<std::vector<double>&>(bind.grad(0))[0] =
        std::numeric_limits<double>::quiet_NaN();
    AdamState st;
    CHECK_THROWS_WITH(adam_step(st, bind, 0.1),
                      Catch::Matchers::ContainsSubstring("weights.w"));
}

TEST_CASE("finite difference check is near exact for linear functions") {
    Tensor p = Tensor::row_vector({1.0, 2.0, 3.0});
    auto loss = [&]() { return 2.0 * p.v[0] - p.v[1] + 0.5 * p.v[2]; };
    auto res = finite_difference_check(loss, {&p}, {{2.0, -1.0, 0.5}});
    CHECK(res.max_rel_err < 1e-10);
}

TEST_CASE("finite difference check is zero for constants") {
    Tensor p = Tensor::row_vector({1.0});
    auto loss = [&]() { return 7.0; };
    auto res = finite_difference_check(loss, {&p}, {{0.0}});
    CHECK(res.max_rel_err == 0.0);
}

TEST_CASE("tanh mlp gradients pass finite differences over 20 seeds") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        Mlp net({2, 4, 2}, Act::Tanh, Act::Tanh, rng);
        Tensor x(3, 2);
        for (double& v : x.v) v = rng.normal();

        auto loss_value = [&]() {
            Graph g;
            Binder bind(g);
            return g.value_of(g.mean(g.square(net.forward(g, bind, g.input(x), "n")))).v[0];
        };
        Graph g;
        Binder bind(g);
        Value loss = g.mean(g.square(net.forward(g, bind, g.input(x), "n")));
        g.backward(loss);
        auto res = finite_difference_check(loss_value, net.params(), collect_grads(bind));
        INFO("seed " << seed << " " << res.worst);
        CHECK(res.max_rel_err < 1e-4);
    }
}

TEST_CASE("every primitive passes finite differences") {
    Rng rng(3);
    Tensor a(2, 3), b(2, 3);
    for (double& v : a.v) v = rng.uniform(0.2, 1.5);
    for (double& v : b.v) v = rng.uniform(0.2, 1.5);

    struct Case {
        const char* name;
        std::function<Value(Graph&, Value, Value)> build;
    };
    std::vector<Case> cases = {
        {"add", [](Graph& g, Value x, Value y) { return g.add(x, y); }},
        {"sub", [](Graph& g, Value x, Value y) { return g.sub(x, y); }},
        {"mul", [](Graph& g, Value x, Value y) { return g.mul(x, y); }},
        {"scale", [](Graph& g, Value x, Value) { return g.scale(x, -1.7); }},
        {"add_scalar", [](Graph& g, Value x, Value) { return g.add_scalar(x, 0.3); }},
        {"tanh", [](Graph& g, Value x, Value) { return g.tanh(x); }},
        {"sigmoid", [](Graph& g, Value x, Value) { return g.sigmoid(x); }},
        {"exp", [](Graph& g, Value x, Value) { return g.exp(x); }},
        {"log", [](Graph& g, Value x, Value) { return g.log(x); }},
        {"square", [](Graph& g, Value x, Value) { return g.square(x); }},
        {"row_sum", [](Graph& g, Value x, Value) { return g.row_sum(x); }},
        {"concat", [](Graph& g, Value x, Value y) { return g.concat_cols(x, y); }},
        {"slice", [](Graph& g, Value x, Value) { return g.slice_cols(x, 1, 3); }},
        {"grad_reverse",
         [](Graph& g, Value x, Value) {
             // compose with square so the reversed grad is input-dependent
             return g.grad_reverse(g.square(x), 2.0);
         }},
    };

    for (auto& c : cases) {
        auto loss_value = [&]() {
            Graph g;
            Binder bind(g);
            Value av = bind.bind(a, "a");
            Value bv = bind.bind(b, "b");
            return g.value_of(g.mean(g.square(c.build(g, av, bv)))).v[0];
        };
        Graph g;
        Binder bind(g);
        Value av = bind.bind(a, "a");
        Value bv = bind.bind(b, "b");
        Value loss = g.mean(g.square(c.build(g, av, bv)));
        g.backward(loss);
        auto grads = collect_grads(bind);
        // grad_reverse flips signs; differentiate the equivalent forward-only loss
        if (std::string(c.name) == "grad_reverse")
            for (auto& gs : grads)
                for (double& x : gs) x = -x / 2.0;
        auto res = finite_difference_check(loss_value, {&a, &b}, grads);
        INFO(c.name << ": " << res.worst);
        CHECK(res.max_rel_err < 1e-4);
    }
}

TEST_CASE("randomly composed graphs up to depth six pass finite differences") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(mix_seed(99, seed));
        Tensor a(2, 2);
        for (double& v : a.v) v = rng.uniform(0.1, 0.9);
        std::vector<int> ops;
        for (int d = 0; d < 6; ++d) ops.push_back(static_cast<int>(rng.uniform_index(5)));

        auto build = [&](Graph& g, Value x) {
            Value h = x;
            for (int op : ops) {
                switch (op) {
                    case 0: h = g.tanh(h); break;
                    case 1: h = g.sigmoid(h); break;
                    case 2: h = g.square(h); break;
                    case 3: h = g.add_scalar(h, 0.25); break;
                    case 4: h = g.mul(h, h); break;
                }
            }
            return g.mean(h);
        };

        auto loss_value = [&]() {
            Graph g;
            Binder bind(g);
            return g.value_of(build(g, bind.bind(a, "a"))).v[0];
        };
        Graph g;
        Binder bind(g);
        Value loss = build(g, bind.bind(a, "a"));
        g.backward(loss);
        auto res = finite_difference_check(loss_value, {&a}, collect_grads(bind));
        INFO("seed " << seed << " " << res.worst);
        CHECK(res.max_rel_err < 1e-4);
    }
}

TEST_CASE("bce and softmax losses match direct formulas and finite differences") {
    Rng rng(5);
    Tensor logits(4, 3), onehot(4, 3);
    for (double& v : logits.v) v = rng.normal();
    for (std::size_t r = 0; r < 4; ++r) onehot.at(r, rng.uniform_index(3)) = 1.0;

    Graph g;
    Binder bind(g);
    Value lv = bind.bind(logits, "logits");
    Value loss = g.softmax_cross_entropy(lv, g.input(onehot));

    double want = 0.0;
    for (std::size_t r = 0; r < 4; ++r) {
        double lse = 0.0;
        for (std::size_t c = 0; c < 3; ++c) lse += std::exp(logits.at(r, c));
        for (std::size_t c = 0; c < 3; ++c)
            if (onehot.at(r, c) == 1.0) want += std::log(lse) - logits.at(r, c);
    }
    want /= 4.0;
    CHECK_THAT(g.value_of(loss).v[0], Catch::Matchers::WithinAbs(want, 1e-12));

    g.backward(loss);
    auto loss_value = [&]() {
        Graph g2;
        Binder b2(g2);
        return g2.value_of(g2.softmax_cross_entropy(b2.bind(logits, "l"), g2.input(onehot))).v[0];
    };
    auto res = finite_difference_check(loss_value, {&logits}, collect_grads(bind));
    INFO(res.worst);
    CHECK(res.max_rel_err < 1e-4);

    // bce against the naive probability formula on moderate logits
    Tensor bl(3, 1), bt(3, 1);
    bl.v = {0.5, -1.2, 2.0};
    bt.v = {1.0, 0.0, 1.0};
    Graph g3;
    Value bloss = g3.bce_with_logits(g3.input(bl), g3.input(bt));
    double bwant = 0.0;
    for (int i = 0; i < 3; ++i) {
        double p = 1.0 / (1.0 + std::exp(-bl.v[i]));
        bwant += -(bt.v[i] * std::log(p) + (1.0 - bt.v[i]) * std::log(1.0 - p));
    }
    CHECK_THAT(g3.value_of(bloss).v[0], Catch::Matchers::WithinAbs(bwant / 3.0, 1e-12));
}

TEST_CASE("identical seeds give bit-identical forward values and gradients") {
    auto run = [](std::uint64_t seed) {
        Rng rng(seed);
        Mlp net({2, 3, 1}, Act::Tanh, Act::None, rng);
        Tensor x(4, 2);
        for (double& v : x.v) v = rng.normal();
        Graph g;
        Binder bind(g);
        Value loss = g.mean(g.square(net.forward(g, bind, g.input(x), "n")));
        g.backward(loss);
        std::vector<double> out{g.value_of(loss).v[0]};
        for (std::size_t i = 0; i < bind.count(); ++i)
            for (double d : bind.grad(i)) out.push_back(d);
        return out;
    };
    CHECK(run(42) == run(42));
    CHECK(run(42) != run(43));
}
