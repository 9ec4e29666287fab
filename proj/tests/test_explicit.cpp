#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "corvec/explicit_model.hpp"
#include "corvec/metrics.hpp"
#include "corvec/normalize.hpp"
#include "corvec/pairs.hpp"
#include "corvec/synth.hpp"

using namespace corvec;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

namespace {

Tensor standardize(const Tensor& X) {
    NormalizationSpec spec =
        fit_normalizer(X, std::vector<NormKind>(X.cols, NormKind::Standard));
    return apply_normalization(spec, X);
}

std::vector<double> group_mean_gap(const Tensor& X, const std::vector<int>& s) {
    std::vector<double> m0(X.cols, 0.0), m1(X.cols, 0.0);
    std::size_t n0 = 0, n1 = 0;
    for (std::size_t r = 0; r < X.rows; ++r) {
        for (std::size_t c = 0; c < X.cols; ++c)
            (s[r] == 0 ? m0[c] : m1[c]) += X.at(r, c);
        (s[r] == 0 ? n0 : n1) += 1;
    }
    std::vector<double> gap(X.cols);
    for (std::size_t c = 0; c < X.cols; ++c) gap[c] = m1[c] / n1 - m0[c] / n0;
    return gap;
}

double norm2(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

}  // namespace

TEST_CASE("zero-initialized extractor gives w = 0 and z = x bitwise") {
    Rng rng(1);
    ExplicitModel m = build_explicit(2, {4}, NormKind::Standard, TaskKind::Cls, 2, rng);
    Tensor X = Tensor::from_rows({{0.3, -1.1}, {0.0, 0.0}, {2.5, 0.7}});
    Corrected c = correct(m, X);
    for (double w : c.W.v) CHECK(w == 0.0);
    CHECK(c.Z.v == X.v);
}

TEST_CASE("correction width equals input width across configurations") {
    Rng rng(2);
    for (std::size_t D : {1u, 2u, 5u}) {
        for (const auto& hidden :
             std::vector<std::vector<std::size_t>>{{}, {4}, {8, 8}}) {
            ExplicitModel m =
                build_explicit(D, hidden, NormKind::Standard, TaskKind::Cls, 2, rng, false);
            Tensor X(3, D);
            for (double& v : X.v) v = rng.uniform(-1.0, 1.0);
            Corrected c = correct(m, X);
            CHECK(c.W.rows == 3);
            CHECK(c.W.cols == D);
            CHECK(c.Z.cols == D);
        }
    }
}

TEST_CASE("skip connection holds z - x = w for random models") {
    Rng rng(3);
    ExplicitModel m = build_explicit(3, {6}, NormKind::Standard, TaskKind::Cls, 2, rng, false);
    Tensor X(20, 3);
    for (double& v : X.v) v = rng.uniform(-2.0, 2.0);
    Corrected c = correct(m, X);
    for (std::size_t i = 0; i < X.size(); ++i)
        CHECK_THAT(c.Z.v[i] - X.v[i], WithinAbs(c.W.v[i], 1e-12));
}

TEST_CASE("tanh corrections stay strictly inside (-1, 1)") {
    Rng rng(4);
    ExplicitModel m = build_explicit(2, {8}, NormKind::Standard, TaskKind::Cls, 2, rng, false);
    Tensor X(200, 2);
    for (double& v : X.v) v = rng.uniform(-3.0, 3.0);
    Corrected c = correct(m, X);
    for (double w : c.W.v) CHECK(std::abs(w) < 1.0);
}

TEST_CASE("minmax model uses shifted sigmoid and clamps reported z") {
    Rng rng(5);
    ExplicitModel m = build_explicit(2, {8}, NormKind::Minmax, TaskKind::Cls, 2, rng, false);
    Tensor X(100, 2);
    for (double& v : X.v) v = rng.uniform(0.0, 1.0);
    Corrected c = correct(m, X);
    for (double w : c.W.v) CHECK(std::abs(w) < 1.0);
    for (std::size_t i = 0; i < X.size(); ++i) {
        CHECK_THAT(c.Z.v[i] - X.v[i], WithinAbs(c.W.v[i], 1e-12));
        CHECK(c.Z_clamped.v[i] >= 0.0);
        CHECK(c.Z_clamped.v[i] <= 1.0);
    }
}

TEST_CASE("minmax model rejects out-of-range input") {
    Rng rng(6);
    ExplicitModel m = build_explicit(2, {4}, NormKind::Minmax, TaskKind::Cls, 2, rng);
    Tensor X = Tensor::from_rows({{0.5, 1.7}});
    CHECK_THROWS_AS(correct(m, X), StructuralError);
}

TEST_CASE("build rejects missing normalization and degenerate dims") {
    Rng rng(7);
    CHECK_THROWS_AS(build_explicit(0, {4}, NormKind::Standard, TaskKind::Cls, 2, rng),
                    ConfigError);
    CHECK_THROWS_AS(build_explicit(2, {4}, NormKind::None, TaskKind::Cls, 2, rng),
                    ConfigError);
    CHECK_THROWS_AS(build_explicit(2, {4}, NormKind::Standard, TaskKind::Cls, 1, rng),
                    ConfigError);
}

TEST_CASE("adversary gradient on extractor scales by exactly -lambda") {
    Rng rng(8);
    ExplicitModel m = build_explicit(2, {4}, NormKind::Standard, TaskKind::Cls, 2, rng, false);
    Tensor X(16, 2);
    for (double& v : X.v) v = rng.uniform(-1.5, 1.5);
    Tensor st(16, 1);
    for (std::size_t r = 0; r < 16; ++r) st.v[r] = static_cast<double>(r % 2);

    // adversary loss only, task head untouched
    auto extractor_grads = [&](double lambda, bool reversed) {
        Graph g;
        Binder bind(g);
        auto fwd = detail::explicit_forward(m, g, bind, g.input(X, "x"));
        Value in = reversed ? g.grad_reverse(fwd.z, lambda) : fwd.z;
        Value logits = m.adversary.forward(g, bind, in, "adversary");
        g.backward(g.bce_with_logits(logits, g.input(st, "s")));
        std::vector<std::vector<double>> out;
        for (std::size_t i = 0; i < bind.count(); ++i)
            if (bind.name(i).rfind("extractor", 0) == 0) out.push_back(bind.grad(i));
        return out;
    };

    auto plain = extractor_grads(1.0, false);
    auto rev1 = extractor_grads(1.0, true);
    auto rev2 = extractor_grads(2.0, true);
    REQUIRE(!plain.empty());
    REQUIRE(plain.size() == rev1.size());
    for (std::size_t i = 0; i < plain.size(); ++i)
        for (std::size_t j = 0; j < plain[i].size(); ++j) {
            CHECK(rev1[i][j] == -plain[i][j]);
            CHECK(rev2[i][j] == 2.0 * rev1[i][j]);
        }
}

TEST_CASE("lambda zero leaves extractor gradients equal to a plain predictor") {
    Rng rng(9);
    ExplicitModel m = build_explicit(2, {4}, NormKind::Standard, TaskKind::Cls, 2, rng, false);
    m.lambda = 0.0;
    Tensor X(16, 2);
    for (double& v : X.v) v = rng.uniform(-1.5, 1.5);
    Tensor y(16, 1), st(16, 1);
    for (std::size_t r = 0; r < 16; ++r) {
        y.v[r] = static_cast<double>(r % 2);
        st.v[r] = static_cast<double>((r / 2) % 2);
    }

    auto grads_with_adversary = [&] {
        Graph g;
        Binder bind(g);
        auto fwd = detail::explicit_forward(m, g, bind, g.input(X, "x"));
        Value task = g.bce_with_logits(m.head.forward(g, bind, fwd.z, "head"),
                                       g.input(y, "y"));
        Value adv = detail::adversary_loss(m, g, bind, fwd.z, st);
        g.backward(g.add(task, adv));
        std::vector<std::vector<double>> out;
        for (std::size_t i = 0; i < bind.count(); ++i)
            if (bind.name(i).rfind("extractor", 0) == 0) out.push_back(bind.grad(i));
        return out;
    };
    auto grads_task_only = [&] {
        Graph g;
        Binder bind(g);
        auto fwd = detail::explicit_forward(m, g, bind, g.input(X, "x"));
        g.backward(g.bce_with_logits(m.head.forward(g, bind, fwd.z, "head"),
                                     g.input(y, "y")));
        std::vector<std::vector<double>> out;
        for (std::size_t i = 0; i < bind.count(); ++i)
            if (bind.name(i).rfind("extractor", 0) == 0) out.push_back(bind.grad(i));
        return out;
    };

    auto with_adv = grads_with_adversary();
    auto without = grads_task_only();
    REQUIRE(!with_adv.empty());
    REQUIRE(with_adv.size() == without.size());
    for (std::size_t i = 0; i < with_adv.size(); ++i) CHECK(with_adv[i] == without[i]);
}

TEST_CASE("plain classifier separates two gaussians and adversary stays informative") {
    Dataset ds = synth_two_gaussians(100, {0, 0}, {1, 1}, 1.0, 11);
    ds.X = standardize(ds.X);
    Rng rng(12);
    ExplicitModel m = build_explicit(2, {8}, NormKind::Standard, TaskKind::Cls, 2, rng);
    ExplicitTrainConfig cfg;
    cfg.lambda = 0.0;
    cfg.epochs = 40;
    cfg.seed = 13;
    TrainTrace trace = train_advcls(m, ds, cfg);

    CHECK(trace.task.front() > trace.task.back());

    std::vector<double> scores = predict_scores(m, ds.X);
    std::size_t hits = 0;
    for (std::size_t r = 0; r < ds.n(); ++r)
        if ((scores[r] >= 0.5 ? 1.0 : 0.0) == ds.y[r]) ++hits;
    CHECK(static_cast<double>(hits) / ds.n() > 0.7);

    // the adversary trained alongside still reads the group from raw-ish z
    ProbeLoss probe = adversary_probe_loss(m, ds.X, ds.s);
    CHECK(probe.accuracy > 0.7);
}

TEST_CASE("strong reversal pushes adversary to chance on held-out data") {
    Dataset train = synth_two_gaussians(150, {0, 0}, {1, 1}, 1.0, 14);
    Dataset held = synth_two_gaussians(100, {0, 0}, {1, 1}, 1.0, 15);
    NormalizationSpec spec =
        fit_normalizer(train.X, std::vector<NormKind>(2, NormKind::Standard));
    train.X = apply_normalization(spec, train.X);
    held.X = apply_normalization(spec, held.X);

    Rng rng(16);
    ExplicitModel m = build_explicit(2, {8}, NormKind::Standard, TaskKind::Cls, 2, rng);
    ExplicitTrainConfig cfg;
    cfg.lambda = 10.0;
    cfg.epochs = 60;
    cfg.seed = 17;
    train_advcls(m, train, cfg);

    ProbeLoss probe = adversary_probe_loss(m, held.X, held.s);
    CHECK_THAT(probe.accuracy, WithinAbs(0.5, 0.1));

    // corrected group means sit closer together than the raw ones
    Corrected c = correct(m, train.X);
    double raw_gap = norm2(group_mean_gap(train.X, train.s));
    double corrected_gap = norm2(group_mean_gap(c.Z, train.s));
    CHECK(corrected_gap < raw_gap);
}

TEST_CASE("training is deterministic per seed") {
    Dataset ds = synth_two_gaussians(40, {0, 0}, {1, 1}, 1.0, 18);
    ds.X = standardize(ds.X);
    auto run = [&] {
        Rng rng(19);
        ExplicitModel m = build_explicit(2, {4}, NormKind::Standard, TaskKind::Cls, 2, rng);
        ExplicitTrainConfig cfg;
        cfg.lambda = 1.0;
        cfg.epochs = 10;
        cfg.seed = 20;
        train_advcls(m, ds, cfg);
        return m;
    };
    ExplicitModel a = run(), b = run();
    auto pa = a.params(), pb = b.params();
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i]->v == pb[i]->v);
}

TEST_CASE("non-finite input surfaces as a training error naming the epoch") {
    Dataset ds = synth_two_gaussians(20, {0, 0}, {1, 1}, 1.0, 21);
    ds.X = standardize(ds.X);
    ds.X.at(3, 1) = std::nan("");
    Rng rng(22);
    ExplicitModel m = build_explicit(2, {4}, NormKind::Standard, TaskKind::Cls, 2, rng);
    ExplicitTrainConfig cfg;
    cfg.epochs = 2;
    CHECK_THROWS_WITH(train_advcls(m, ds, cfg), ContainsSubstring("epoch 0"));
}

TEST_CASE("train_advcls rejects wrong task, bad config, and non-binary targets") {
    Rng rng(23);
    Dataset ds = synth_two_gaussians(10, {0, 0}, {1, 1}, 1.0, 24);
    ds.X = standardize(ds.X);
    ExplicitTrainConfig cfg;

    ExplicitModel rank_model =
        build_explicit(2, {4}, NormKind::Standard, TaskKind::Rank, 2, rng);
    CHECK_THROWS_AS(train_advcls(rank_model, ds, cfg), ConfigError);

    ExplicitModel m = build_explicit(2, {4}, NormKind::Standard, TaskKind::Cls, 2, rng);
    cfg.epochs = 0;
    CHECK_THROWS_AS(train_advcls(m, ds, cfg), ConfigError);
    cfg.epochs = 1;
    cfg.lambda = -0.5;
    CHECK_THROWS_AS(train_advcls(m, ds, cfg), ConfigError);
    cfg.lambda = 1.0;
    ds.y[0] = 0.5;
    CHECK_THROWS_AS(train_advcls(m, ds, cfg), ConfigError);
}

TEST_CASE("pair head reproduces tanh(1) on a first-coordinate projector") {
    Rng rng(25);
    ExplicitModel m = build_explicit(2, {4}, NormKind::Standard, TaskKind::Rank, 2, rng);
    m.head.layers[0].w.at(0, 0) = 1.0;
    m.head.layers[0].w.at(1, 0) = 0.0;
    m.head.layers[0].b.v[0] = 0.0;
    std::vector<double> s =
        predict_scores(m, Tensor::from_rows({{1.0, 0.0}, {0.0, 0.0}}));
    CHECK_THAT(std::tanh(s[0] - s[1]), WithinAbs(std::tanh(1.0), 1e-12));
}

TEST_CASE("pair head is antisymmetric under argument swap") {
    Rng rng(26);
    ExplicitModel m = build_explicit(3, {5}, NormKind::Standard, TaskKind::Rank, 2, rng, false);
    for (int t = 0; t < 20; ++t) {
        Tensor pair(2, 3);
        for (double& v : pair.v) v = rng.uniform(-2.0, 2.0);
        std::vector<double> s = predict_scores(m, pair);
        CHECK_THAT(std::tanh(s[0] - s[1]) + std::tanh(s[1] - s[0]), WithinAbs(0.0, 1e-12));
    }
}

TEST_CASE("ranker orders a perfectly learnable toy list") {
    Rng data_rng(27);
    Dataset ds;
    ds.features = {{"x1", NormKind::Standard, true}, {"x2", NormKind::Standard, true}};
    ds.sensitive_name = "s";
    ds.target_name = "y";
    ds.X = Tensor(200, 2);
    for (std::size_t r = 0; r < 200; ++r) {
        ds.X.at(r, 0) = data_rng.uniform(0.0, 1.0);
        ds.X.at(r, 1) = data_rng.uniform(-1.0, 1.0);
        ds.s.push_back(static_cast<int>(r % 2));
        ds.y.push_back(ds.X.at(r, 0));
    }
    Tensor raw = ds.X;
    ds.X = standardize(ds.X);
    std::vector<RankPair> pairs = make_pairs(ds, 2000, 28);

    Rng rng(29);
    ExplicitModel m = build_explicit(2, {}, NormKind::Standard, TaskKind::Rank, 2, rng);
    ExplicitTrainConfig cfg;
    cfg.lambda = 0.5;
    cfg.epochs = 30;
    cfg.seed = 30;
    train_advdr(m, ds, pairs, cfg);

    std::vector<double> scores = predict_scores(m, ds.X);
    RankedList list = make_ranked_list(scores, ds.y, ds.s);
    CHECK(ndcg_at_k(list, 10) >= 0.95);
}

TEST_CASE("train_advdr rejects wrong task and empty pairs") {
    Rng rng(31);
    Dataset ds = synth_two_gaussians(10, {0, 0}, {1, 1}, 1.0, 32);
    ds.X = standardize(ds.X);
    std::vector<RankPair> pairs = make_pairs(ds, 40, 33);
    ExplicitTrainConfig cfg;

    ExplicitModel cls_model =
        build_explicit(2, {4}, NormKind::Standard, TaskKind::Cls, 2, rng);
    CHECK_THROWS_AS(train_advdr(cls_model, ds, pairs, cfg), ConfigError);

    ExplicitModel m = build_explicit(2, {4}, NormKind::Standard, TaskKind::Rank, 2, rng);
    CHECK_THROWS_AS(train_advdr(m, ds, {}, cfg), ConfigError);
}

TEST_CASE("untrained adversary sits at chance on balanced random labels") {
    Rng rng(34);
    ExplicitModel m = build_explicit(2, {4}, NormKind::Standard, TaskKind::Cls, 2, rng, false);
    Tensor X(600, 2);
    std::vector<int> s;
    for (std::size_t r = 0; r < 600; ++r) {
        X.at(r, 0) = rng.normal();
        X.at(r, 1) = rng.normal();
        s.push_back(static_cast<int>(r % 2));
    }
    ProbeLoss probe = adversary_probe_loss(m, X, s);
    CHECK_THAT(probe.accuracy, WithinAbs(0.5, 0.1));
}

TEST_CASE("constant representation pins adversary accuracy to the majority ratio") {
    Dataset ds;
    ds.features = {{"x1", NormKind::Standard, true}, {"x2", NormKind::Standard, true}};
    ds.sensitive_name = "s";
    ds.target_name = "y";
    ds.X = Tensor(40, 2, 0.25);
    for (std::size_t r = 0; r < 40; ++r) {
        ds.s.push_back(r < 28 ? 0 : 1);
        ds.y.push_back(r < 28 ? 0.0 : 1.0);
    }
    Rng rng(35);
    ExplicitModel m = build_explicit(2, {4}, NormKind::Standard, TaskKind::Cls, 2, rng);
    ExplicitTrainConfig cfg;
    cfg.lambda = 0.0;
    cfg.epochs = 50;
    cfg.batch = 40;
    cfg.seed = 36;
    train_advcls(m, ds, cfg);
    ProbeLoss probe = adversary_probe_loss(m, ds.X, ds.s);
    CHECK(probe.accuracy == 0.7);
}

TEST_CASE("multiclass sensitive attribute trains through softmax adversary") {
    Rng data_rng(37);
    Dataset ds;
    ds.features = {{"x1", NormKind::Standard, true}, {"x2", NormKind::Standard, true}};
    ds.sensitive_name = "s";
    ds.target_name = "y";
    ds.X = Tensor(90, 2);
    for (std::size_t r = 0; r < 90; ++r) {
        int g = static_cast<int>(r % 3);
        ds.X.at(r, 0) = g + 0.3 * data_rng.normal();
        ds.X.at(r, 1) = 0.3 * data_rng.normal();
        ds.s.push_back(g);
        ds.y.push_back(static_cast<double>(r % 2));
    }
    ds.X = standardize(ds.X);
    Rng rng(38);
    ExplicitModel m = build_explicit(2, {6}, NormKind::Standard, TaskKind::Cls, 3, rng);
    ExplicitTrainConfig cfg;
    cfg.lambda = 1.0;
    cfg.epochs = 15;
    cfg.seed = 39;
    TrainTrace trace = train_advcls(m, ds, cfg);
    CHECK(trace.total.size() == 15);
    for (double t : trace.total) CHECK(std::isfinite(t));
    ProbeLoss probe = adversary_probe_loss(m, ds.X, ds.s);
    CHECK(probe.accuracy >= 0.0);
    CHECK(probe.accuracy <= 1.0);
}

TEST_CASE("classification scores are probabilities") {
    Rng rng(40);
    ExplicitModel m = build_explicit(2, {4}, NormKind::Standard, TaskKind::Cls, 2, rng, false);
    Tensor X(30, 2);
    for (double& v : X.v) v = rng.uniform(-2.0, 2.0);
    for (double p : predict_scores(m, X)) {
        CHECK(p > 0.0);
        CHECK(p < 1.0);
    }
}
