#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "corvec/dataset.hpp"
#include "corvec/folds.hpp"
#include "corvec/normalize.hpp"
#include "corvec/pairs.hpp"
#include "corvec/schema.hpp"
#include "corvec/synth.hpp"

using namespace corvec;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

DatasetSchema minimal_schema() {
    DatasetSchema sc;
    sc.columns = {{"age", ColumnKind::Continuous, NormKind::Standard, {}},
                  {"sex", ColumnKind::Sensitive, NormKind::None, {}},
                  {"hired", ColumnKind::Target, NormKind::None, {}}};
    return sc;
}

}  // namespace

TEST_CASE("minimal csv loads with one feature column") {
    std::string p = temp_path("corvec_min.csv");
    write_file(p, "age,sex,hired\n23,0,1\n31,1,0\n44,0,1\n");
    Dataset ds = load_csv(p, minimal_schema());
    CHECK(ds.n() == 3);
    CHECK(ds.dim() == 1);
    CHECK(ds.s == std::vector<int>{0, 1, 0});
    CHECK(ds.y == std::vector<double>{1.0, 0.0, 1.0});
    CHECK(ds.X.at(1, 0) == 31.0);
}

TEST_CASE("unseen category names the row") {
    DatasetSchema sc;
    sc.columns = {{"job", ColumnKind::Categorical, NormKind::Minmax, {"A", "B"}},
                  {"sex", ColumnKind::Sensitive, NormKind::None, {}},
                  {"hired", ColumnKind::Target, NormKind::None, {}}};
    std::string p = temp_path("corvec_badcat.csv");
    write_file(p, "job,sex,hired\nA,0,1\nC,1,0\n");
    CHECK_THROWS_WITH(load_csv(p, sc), Catch::Matchers::ContainsSubstring("row 2"));
}

TEST_CASE("categoricals expand to one-hot columns flagged non-flow") {
    DatasetSchema sc;
    sc.columns = {{"age", ColumnKind::Continuous, NormKind::Standard, {}},
                  {"job", ColumnKind::Categorical, NormKind::Minmax, {"A", "B", "C"}},
                  {"sex", ColumnKind::Sensitive, NormKind::None, {}},
                  {"hired", ColumnKind::Target, NormKind::None, {}}};
    std::string p = temp_path("corvec_cat.csv");
    write_file(p, "age,job,sex,hired\n20,B,0,1\n30,C,1,0\n");
    Dataset ds = load_csv(p, sc);
    REQUIRE(ds.dim() == 4);
    CHECK(ds.X.at(0, 1) == 0.0);
    CHECK(ds.X.at(0, 2) == 1.0);
    CHECK(ds.X.at(0, 3) == 0.0);
    CHECK(ds.X.at(1, 3) == 1.0);
    CHECK(ds.features[0].flow_eligible);
    CHECK_FALSE(ds.features[1].flow_eligible);
    CHECK_FALSE(ds.features[3].flow_eligible);

    Tensor fv = ds.flow_view();
    CHECK(fv.cols == 1);
    CHECK(fv.at(0, 0) == 20.0);
    CHECK(ds.flow_columns() == std::vector<std::size_t>{0});
}

TEST_CASE("header mismatches and bad numerics raise ingestion errors") {
    std::string p = temp_path("corvec_hdr.csv");
    write_file(p, "age,gender,hired\n23,0,1\n");
    CHECK_THROWS_AS(load_csv(p, minimal_schema()), IngestError);
    write_file(p, "age,sex,hired\ntwenty,0,1\n");
    CHECK_THROWS_WITH(load_csv(p, minimal_schema()),
                      Catch::Matchers::ContainsSubstring("age"));
}

TEST_CASE("synth csv round-trips bit-exactly") {
    Dataset ds = synth_two_gaussians(25, {0.0, 0.0}, {1.0, 1.0}, 1.0, 9);
    std::string p = temp_path("corvec_synth.csv");
    save_csv(ds, p);
    DatasetSchema sc;
    sc.columns = {{"x1", ColumnKind::Continuous, NormKind::Standard, {}},
                  {"x2", ColumnKind::Continuous, NormKind::Standard, {}},
                  {"s", ColumnKind::Sensitive, NormKind::None, {}},
                  {"y", ColumnKind::Target, NormKind::None, {}}};
    Dataset back = load_csv(p, sc);
    REQUIRE(back.n() == ds.n());
    CHECK(back.X.v == ds.X.v);
    CHECK(back.s == ds.s);
    CHECK(back.y == ds.y);
}

TEST_CASE("standard scaling matches hand computation") {
    Tensor X = Tensor::col_vector({1.0, 2.0, 3.0});
    NormalizationSpec spec = fit_normalizer(X, {NormKind::Standard});
    CHECK_THAT(spec.cols[0].a, Catch::Matchers::WithinAbs(2.0, 1e-15));
    CHECK_THAT(spec.cols[0].b, Catch::Matchers::WithinAbs(std::sqrt(2.0 / 3.0), 1e-15));
    Tensor N = apply_normalization(spec, X);
    CHECK_THAT(N.v[0], Catch::Matchers::WithinAbs(-1.2247, 5e-5));
    CHECK_THAT(N.v[1], Catch::Matchers::WithinAbs(0.0, 1e-15));
    CHECK_THAT(N.v[2], Catch::Matchers::WithinAbs(1.2247, 5e-5));
}

TEST_CASE("degenerate columns normalize to zero") {
    Tensor X = Tensor::col_vector({5.0, 5.0, 5.0});
    NormalizationSpec st = fit_normalizer(X, {NormKind::Standard});
    CHECK(apply_normalization(st, X).v == std::vector<double>(3, 0.0));
    CHECK(st.cols[0].b == 1.0);
    NormalizationSpec mm = fit_normalizer(X, {NormKind::Minmax});
    CHECK(apply_normalization(mm, X).v == std::vector<double>(3, 0.0));
    CHECK(invert_normalization(mm, apply_normalization(mm, X)).v == X.v);
}

TEST_CASE("minmax endpoints map to zero and one") {
    Tensor X = Tensor::col_vector({0.0, 10.0});
    NormalizationSpec spec = fit_normalizer(X, {NormKind::Minmax});
    Tensor N = apply_normalization(spec, X);
    CHECK(N.v == std::vector<double>{0.0, 1.0});
}

TEST_CASE("normalization round-trips on random matrices") {
    Rng rng(21);
    for (int rep = 0; rep < 5; ++rep) {
        Tensor X(17, 4);
        for (double& v : X.v) v = rng.uniform(-50.0, 50.0);
        NormalizationSpec spec = fit_normalizer(
            X, {NormKind::Standard, NormKind::Minmax, NormKind::None, NormKind::Standard});
        Tensor back = invert_normalization(spec, apply_normalization(spec, X));
        for (std::size_t i = 0; i < X.size(); ++i)
            CHECK_THAT(back.v[i], Catch::Matchers::WithinAbs(X.v[i], 1e-12));
    }
}

TEST_CASE("affine inverse arithmetic") {
    NormalizationSpec spec;
    spec.cols = {{NormKind::Standard, 2.0, 1.0}};
    Tensor N = Tensor::col_vector({1.0});
    CHECK(invert_normalization(spec, N).v[0] == 3.0);
}

TEST_CASE("zero correction maps to zero raw correction") {
    NormalizationSpec spec;
    spec.cols = {{NormKind::Standard, 7.0, 3.0}, {NormKind::Minmax, 2.0, 12.0}};
    Tensor W(1, 2);
    CHECK(invert_correction(spec, W).v == std::vector<double>{0.0, 0.0});
    W.v = {1.0, 0.5};
    Tensor raw = invert_correction(spec, W);
    CHECK(raw.v[0] == 3.0);  // times std, no mean offset
    CHECK(raw.v[1] == 5.0);  // times range, no min offset
}

TEST_CASE("fold sizes follow the remainder rule") {
    FoldPlan p9 = make_folds(9, 3, 3, 1);
    for (const auto& f : p9.internal_folds) CHECK(f.size() == 3);
    FoldPlan p10 = make_folds(10, 3, 3, 1);
    std::multiset<std::size_t> sizes;
    for (const auto& f : p10.external_folds) sizes.insert(f.size());
    CHECK(sizes == std::multiset<std::size_t>{3, 3, 4});
}

TEST_CASE("folds are deterministic, covering, and disjoint") {
    FoldPlan a = make_folds(103, 3, 3, 77);
    FoldPlan b = make_folds(103, 3, 3, 77);
    CHECK(a.internal_folds == b.internal_folds);
    CHECK(a.external_folds == b.external_folds);
    FoldPlan c = make_folds(103, 3, 3, 78);
    CHECK(a.internal_folds != c.internal_folds);

    for (const auto* part : {&a.internal_folds, &a.external_folds}) {
        std::set<std::size_t> seen;
        std::size_t total = 0;
        for (const auto& f : *part) {
            total += f.size();
            seen.insert(f.begin(), f.end());
        }
        CHECK(total == 103);
        CHECK(seen.size() == 103);
    }
    // independent shuffles
    CHECK(a.internal_folds != a.external_folds);
}

TEST_CASE("too few rows for folds is a config error") {
    CHECK_THROWS_AS(make_folds(5, 3, 3, 0), ConfigError);
}

TEST_CASE("two gaussian synth hits its group means") {
    Dataset ds = synth_two_gaussians(10000, {0.0, 0.0}, {1.0, 1.0}, 1.0, 4);
    REQUIRE(ds.n() == 20000);
    double m0x = 0, m0y = 0, m1x = 0, m1y = 0;
    for (std::size_t r = 0; r < ds.n(); ++r) {
        if (ds.s[r] == 0) {
            m0x += ds.X.at(r, 0);
            m0y += ds.X.at(r, 1);
        } else {
            m1x += ds.X.at(r, 0);
            m1y += ds.X.at(r, 1);
        }
    }
    CHECK(std::abs(m0x / 10000) < 0.05);
    CHECK(std::abs(m0y / 10000) < 0.05);
    CHECK(std::abs(m1x / 10000 - 1.0) < 0.05);
    CHECK(std::abs(m1y / 10000 - 1.0) < 0.05);
}

TEST_CASE("zero sigma collapses groups onto their means") {
    Dataset ds = synth_two_gaussians(3, {0.5, -0.5}, {2.0, 2.0}, 0.0, 1);
    for (std::size_t r = 0; r < 3; ++r) {
        CHECK(ds.X.at(r, 0) == 0.5);
        CHECK(ds.X.at(r, 1) == -0.5);
    }
    CHECK(ds.y[0] == 0.0);
    CHECK(ds.y[5] == 1.0);
}

TEST_CASE("pair indicator handles order and ties") {
    Dataset ds;
    ds.features = {{"x", NormKind::None, true}};
    ds.X = Tensor(2, 1);
    ds.s = {0, 1};
    ds.y = {1.0, 0.0};
    auto pairs = make_pairs(ds, 50, 3);
    for (const RankPair& p : pairs) {
        if (p.i == 0 && p.j == 1) CHECK(p.dy == 1.0);
        if (p.i == 1 && p.j == 0) CHECK(p.dy == 0.0);
    }

    ds.y = {0.7, 0.7};
    auto tied = make_pairs(ds, 10, 3);
    CHECK(tied.size() == 10);
    for (const RankPair& p : tied) CHECK(p.dy == 1.0);
}

TEST_CASE("pair budget is met exactly and reproducibly") {
    Dataset ds = synth_two_gaussians(25, {0, 0}, {1, 1}, 1.0, 5);
    auto a = make_pairs(ds, 100, 11);
    auto b = make_pairs(ds, 100, 11);
    REQUIRE(a.size() == 100);
    std::size_t ones = 0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        CHECK(a[k].i == b[k].i);
        CHECK(a[k].j == b[k].j);
        if (a[k].dy == 1.0) ++ones;
    }
    CHECK(ones == 50);  // both classes reachable on a binary target
}

TEST_CASE("pairs stay within query groups") {
    Dataset ds = synth_two_gaussians(10, {0, 0}, {1, 1}, 1.0, 6);
    ds.query_ids.resize(ds.n());
    for (std::size_t i = 0; i < ds.n(); ++i) ds.query_ids[i] = i % 4;
    auto pairs = make_pairs(ds, 200, 8);
    for (const RankPair& p : pairs) CHECK(ds.query_ids[p.i] == ds.query_ids[p.j]);
}

TEST_CASE("subsample keeps everything at fraction one") {
    Dataset ds = synth_two_gaussians(10, {0, 0}, {1, 1}, 1.0, 2);
    std::vector<long> strata(ds.n());
    for (std::size_t i = 0; i < ds.n(); ++i) strata[i] = ds.s[i];
    Dataset sub = subsample_stratified(ds, 1.0, strata, 0);
    CHECK(sub.n() == ds.n());
    CHECK(sub.X.v == ds.X.v);
}

TEST_CASE("subsample preserves stratum shares") {
    Dataset ds;
    ds.features = {{"x", NormKind::None, true}};
    ds.X = Tensor(1000, 1);
    std::vector<long> strata;
    for (int i = 0; i < 1000; ++i) {
        ds.s.push_back(i < 700 ? 0 : 1);
        ds.y.push_back(0.0);
        strata.push_back(i < 700 ? 0 : 1);
    }
    Dataset sub = subsample_stratified(ds, 0.1, strata, 13);
    std::size_t n0 = 0, n1 = 0;
    for (int g : sub.s) (g == 0 ? n0 : n1)++;
    CHECK(std::abs(static_cast<long>(n0) - 70) <= 1);
    CHECK(std::abs(static_cast<long>(n1) - 30) <= 1);

    // law-dataset-shaped count
    Dataset big;
    big.features = {{"x", NormKind::None, true}};
    big.X = Tensor(21792, 1);
    big.s.assign(21792, 0);
    big.y.assign(21792, 0.0);
    std::vector<long> one_stratum(21792, 0);
    Dataset law = subsample_stratified(big, 0.1, one_stratum, 1);
    CHECK((law.n() == 2179 || law.n() == 2180));
}

TEST_CASE("empty strata after rounding keep one row") {
    Dataset ds;
    ds.features = {{"x", NormKind::None, true}};
    ds.X = Tensor(101, 1);
    std::vector<long> strata;
    for (int i = 0; i < 101; ++i) {
        ds.s.push_back(0);
        ds.y.push_back(0.0);
        strata.push_back(i == 100 ? 1 : 0);  // singleton stratum
    }
    Dataset sub = subsample_stratified(ds, 0.1, strata, 3);
    long minority = 0;
    for (std::size_t i = 0; i < sub.n(); ++i) minority += 0;
    CHECK(sub.n() == 11);  // 10 from the big stratum, 1 kept from the singleton
}

TEST_CASE("schema json round-trips and validates") {
    DatasetSchema sc;
    sc.columns = {{"age", ColumnKind::Continuous, NormKind::Standard, {}},
                  {"job", ColumnKind::Categorical, NormKind::Minmax, {"A", "B"}},
                  {"sex", ColumnKind::Sensitive, NormKind::None, {}},
                  {"pass", ColumnKind::Target, NormKind::None, {}}};
    nlohmann::json j = schema_to_json(sc);
    DatasetSchema back = schema_from_json(j);
    REQUIRE(back.columns.size() == 4);
    CHECK(back.columns[1].categories == std::vector<std::string>{"A", "B"});
    CHECK(back.columns[2].kind == ColumnKind::Sensitive);

    DatasetSchema bad;
    bad.columns = {{"age", ColumnKind::Continuous, NormKind::Standard, {}}};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}
