#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "corvec/analyze.hpp"
#include "corvec/checkpoint.hpp"
#include "corvec/experiment.hpp"
#include "corvec/probe.hpp"
#include "corvec/svg.hpp"
#include "corvec/synth.hpp"
#include "corvec/ttest.hpp"

namespace {

using namespace corvec;

struct CommonArgs {
    std::string config;
    std::string out = ".";
    std::uint64_t seed = 0;
    bool seed_given = false;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool needs_config) {
    CLI::Option* c = cmd->add_option("--config", args.config, "JSON config file");
    if (needs_config) c->required();
    cmd->add_option("--out", args.out, "output directory");
    cmd->add_option("--seed", args.seed, "override the config seed")
        ->each([&args](const std::string&) { args.seed_given = true; });
}

void ensure_out_dir(const std::string& out) {
    std::error_code ec;
    std::filesystem::create_directories(out, ec);
    if (ec) throw IngestError("cannot create output directory '" + out + "'");
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IngestError("cannot write '" + path + "'");
    f << text;
}

void write_json(const std::string& path, const nlohmann::ordered_json& j) {
    write_text(path, j.dump(2) + "\n");
}

ExperimentConfig load_config(const CommonArgs& args) {
    ExperimentConfig cfg = load_experiment_config(args.config);
    if (args.seed_given) cfg.seed = args.seed;
    return cfg;
}

Dataset load_dataset(const ExperimentConfig& cfg) {
    if (cfg.dataset_path.empty() || cfg.schema_path.empty())
        throw ConfigError("config needs 'dataset' and 'schema' paths");
    return load_csv(cfg.dataset_path, load_schema(cfg.schema_path));
}

// ---- synth ----------------------------------------------------------------

struct SynthArgs {
    CommonArgs common;
    std::size_t n_per_group = 200;
    std::vector<double> mu0 = {0.0, 0.0}, mu1 = {1.0, 1.0};
    double sigma = 1.0;
    std::string task = "cls";
};

int run_synth(const SynthArgs& args) {
    if (args.mu0.size() != 2 || args.mu1.size() != 2)
        throw ConfigError("synth: --mu0 and --mu1 take exactly two values");
    Dataset ds = synth_two_gaussians(args.n_per_group, {args.mu0[0], args.mu0[1]},
                                     {args.mu1[0], args.mu1[1]}, args.sigma,
                                     args.common.seed);
    if (args.task == "rank") {
        // graded relevance 0..3 from the first feature, independent of noise sign
        for (std::size_t r = 0; r < ds.n(); ++r) {
            double v = ds.X.at(r, 0);
            ds.y[r] = (v > 0.0 ? 1.0 : 0.0) + (v > 0.5 ? 1.0 : 0.0) +
                      (v > 1.0 ? 1.0 : 0.0);
        }
    } else if (args.task != "cls") {
        throw ConfigError("synth: --task must be cls or rank");
    }
    ensure_out_dir(args.common.out);
    std::string csv_path = args.common.out + "/two_gaussians.csv";
    save_csv(ds, csv_path);

    DatasetSchema schema;
    schema.columns.push_back({"x1", ColumnKind::Continuous, NormKind::Standard, {}});
    schema.columns.push_back({"x2", ColumnKind::Continuous, NormKind::Standard, {}});
    schema.columns.push_back({"s", ColumnKind::Sensitive, NormKind::None, {}});
    schema.columns.push_back({"y", ColumnKind::Target, NormKind::None, {}});
    write_json(args.common.out + "/two_gaussians.schema.json", schema_to_json(schema));
    std::cout << "wrote " << csv_path << " (" << ds.n() << " rows)\n";
    return 0;
}

// ---- train ----------------------------------------------------------------

int run_train(const CommonArgs& args) {
    ExperimentConfig cfg = load_config(args);
    Dataset ds = load_dataset(cfg);
    ensure_out_dir(args.out);
    Checkpoint ckpt = train_model(cfg, cfg.hyper, ds, mix_seed(cfg.seed, 0));
    std::string path = args.out + "/checkpoint.json";
    save_checkpoint(ckpt, path);
    std::cout << "trained " << to_string(cfg.model) << " on " << ds.n()
              << " rows; wrote " << path << "\n";
    return 0;
}

// ---- evaluate ---------------------------------------------------------------

int run_evaluate(const CommonArgs& args, const std::string& ckpt_path) {
    ExperimentConfig cfg = load_config(args);
    Dataset ds = load_dataset(cfg);
    Checkpoint ckpt = load_checkpoint(ckpt_path);
    auto vals = evaluate_model(ckpt, ds, cfg);
    nlohmann::ordered_json j;
    j["objective_name"] = cfg.objective;
    for (const auto& [k, v] : vals) j[k] = v;
    ensure_out_dir(args.out);
    write_json(args.out + "/evaluation.json", j);
    std::cout << j.dump(2) << "\n";
    return 0;
}

// ---- search -----------------------------------------------------------------

int run_search(const CommonArgs& args) {
    ExperimentConfig cfg = load_config(args);
    Dataset ds = load_dataset(cfg);
    ensure_out_dir(args.out);
    std::vector<RunRecord> records = run_experiment(cfg, ds, args.out);
    write_run_reports(records, args.out);
    std::cout << "wrote " << args.out << "/report.json and " << args.out
              << "/metrics.csv (" << records.size() << " run(s))\n";
    return 0;
}

// ---- probe ------------------------------------------------------------------

int run_probe(const CommonArgs& args, const std::string& ckpt_path) {
    ExperimentConfig cfg = load_config(args);
    Dataset ds = load_dataset(cfg);
    Checkpoint ckpt = load_checkpoint(ckpt_path);
    Tensor rep = model_representation(ckpt, ds);
    nlohmann::ordered_json j;
    for (ProbeKind kind : {ProbeKind::Logistic, ProbeKind::Knn}) {
        ProbeReport r = probe_representation(rep, ds.s, kind);
        nlohmann::ordered_json jr;
        jr["accuracy"] = r.accuracy;
        jr["auc"] = r.auc;
        jr["adrg"] = r.adrg;
        j[to_string(kind)] = jr;
    }
    ensure_out_dir(args.out);
    write_json(args.out + "/probe.json", j);
    std::cout << j.dump(2) << "\n";
    return 0;
}

// ---- analyze ----------------------------------------------------------------

int run_analyze(const CommonArgs& args, const std::string& ckpt_path,
                const std::string& feature) {
    ExperimentConfig cfg = load_config(args);
    Dataset ds = load_dataset(cfg);
    Checkpoint ckpt = load_checkpoint(ckpt_path);
    CorrectionReport rep = analyze_corrections(ckpt, ds, feature);
    ensure_out_dir(args.out);
    write_json(args.out + "/analysis.json", correction_report_to_json(rep));

    std::cout << "feature: " << rep.feature << "\n";
    for (std::size_t i = 0; i < rep.groups.size(); ++i)
        std::cout << "  group " << rep.groups[i] << ": original mean "
                  << format_double(rep.original_mean[i]) << ", corrected mean "
                  << format_double(rep.corrected_mean[i]) << "\n";
    std::cout << "  gap: " << format_double(rep.original_gap) << " -> "
              << format_double(rep.corrected_gap) << " ("
              << format_double(rep.relative_pct) << "%)\n";
    return 0;
}

// ---- plot -------------------------------------------------------------------

int run_plot(const CommonArgs& args, const std::string& ckpt_path) {
    ExperimentConfig cfg = load_config(args);
    Dataset ds = load_dataset(cfg);
    Checkpoint ckpt = load_checkpoint(ckpt_path);
    if (ckpt.columns.size() != 2)
        throw ConfigError("plot: direction plots need a 2-feature model, got " +
                          std::to_string(ckpt.columns.size()));
    Tensor X_raw(ds.n(), 2);
    for (std::size_t r = 0; r < ds.n(); ++r)
        for (std::size_t c = 0; c < 2; ++c)
            X_raw.at(r, c) = ds.X.at(r, ckpt.columns[c]);
    Tensor Xn = apply_normalization(ckpt.norm, X_raw);
    Tensor Z_norm = ckpt.explicit_model
                        ? correct(*ckpt.explicit_model, Xn).Z
                        : fair_transform(*ckpt.flow_model, Xn);
    Tensor Z_raw = invert_normalization(ckpt.norm, Z_norm);
    ensure_out_dir(args.out);
    std::string path = args.out + "/direction_plot.svg";
    emit_direction_plot(X_raw, Z_raw, ds.s, path);
    std::cout << "wrote " << path << "\n";
    return 0;
}

// ---- compare ----------------------------------------------------------------

int run_compare(const CommonArgs& args) {
    std::ifstream in(args.config);
    if (!in) throw IngestError("cannot open config '" + args.config + "'");
    nlohmann::ordered_json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw IngestError("config '" + args.config + "': " + e.what());
    }
    if (!j.contains("a") || !j.contains("b"))
        throw ConfigError("compare config needs 'a' and 'b' experiment config paths");
    std::string metric = j.value("metric", "objective");
    std::size_t folds = j.value("external_folds", std::size_t{15});

    ExperimentConfig cfg_a = load_experiment_config(j.at("a").get<std::string>());
    ExperimentConfig cfg_b = load_experiment_config(j.at("b").get<std::string>());
    if (cfg_a.dataset_path != cfg_b.dataset_path)
        throw ConfigError("compare: both configs must target the same dataset");
    for (ExperimentConfig* cfg : {&cfg_a, &cfg_b}) {
        cfg->external_folds = folds;
        cfg->runs = 1;
        if (args.seed_given) cfg->seed = args.seed;
    }
    cfg_b.seed = cfg_a.seed;  // identical fold partitions make the folds pairable

    Dataset ds = load_dataset(cfg_a);
    std::vector<RunRecord> rec_a = run_experiment(cfg_a, ds);
    std::vector<RunRecord> rec_b = run_experiment(cfg_b, ds);
    std::vector<double> scores_a, scores_b;
    for (const FoldMetrics& fm : rec_a[0].folds) scores_a.push_back(fm.values.at(metric));
    for (const FoldMetrics& fm : rec_b[0].folds) scores_b.push_back(fm.values.at(metric));

    std::size_t n_test = ds.n() / folds;
    if (n_test == 0) n_test = 1;
    TTestResult t = nb_corrected_ttest(scores_a, scores_b, ds.n() - n_test, n_test);

    double mean_a = 0.0, mean_b = 0.0;
    for (double v : scores_a) mean_a += v / static_cast<double>(scores_a.size());
    for (double v : scores_b) mean_b += v / static_cast<double>(scores_b.size());

    nlohmann::ordered_json out;
    out["metric"] = metric;
    out["external_folds"] = folds;
    out["model_a"] = to_string(cfg_a.model);
    out["model_b"] = to_string(cfg_b.model);
    out["mean_a"] = mean_a;
    out["mean_b"] = mean_b;
    out["t"] = std::isinf(t.t) ? nlohmann::ordered_json(t.t > 0 ? "inf" : "-inf")
                               : nlohmann::ordered_json(t.t);
    out["p"] = t.p;
    out["dof"] = t.dof;
    out["degenerate"] = t.degenerate;
    ensure_out_dir(args.out);
    write_json(args.out + "/compare.json", out);
    std::cout << out.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"correction-vector fair representation toolkit"};
    app.require_subcommand(1);

    SynthArgs synth_args;
    CLI::App* synth = app.add_subcommand("synth", "generate the two-Gaussians dataset");
    add_common(synth, synth_args.common, false);
    synth->add_option("--n-per-group", synth_args.n_per_group, "rows per group");
    synth->add_option("--mu0", synth_args.mu0, "group 0 mean (two values)")
        ->expected(2);
    synth->add_option("--mu1", synth_args.mu1, "group 1 mean (two values)")
        ->expected(2);
    synth->add_option("--sigma", synth_args.sigma, "within-group standard deviation");
    synth->add_option("--task", synth_args.task, "cls or rank target");

    CommonArgs train_args;
    CLI::App* train = app.add_subcommand("train", "train one model on the full dataset");
    add_common(train, train_args, true);

    CommonArgs eval_args;
    std::string eval_ckpt;
    CLI::App* evaluate = app.add_subcommand("evaluate", "score a checkpoint on a dataset");
    add_common(evaluate, eval_args, true);
    evaluate->add_option("--checkpoint", eval_ckpt, "checkpoint file")->required();

    CommonArgs search_args;
    CLI::App* search = app.add_subcommand(
        "search", "nested-fold hyperparameter search and external evaluation");
    add_common(search, search_args, true);

    CommonArgs probe_args;
    std::string probe_ckpt;
    CLI::App* probe = app.add_subcommand(
        "probe", "attack a trained representation with sensitive-attribute probes");
    add_common(probe, probe_args, true);
    probe->add_option("--checkpoint", probe_ckpt, "checkpoint file")->required();

    CommonArgs analyze_args;
    std::string analyze_ckpt, analyze_feature;
    CLI::App* analyze = app.add_subcommand(
        "analyze", "per-group correction report for one feature, in raw units");
    add_common(analyze, analyze_args, true);
    analyze->add_option("--checkpoint", analyze_ckpt, "checkpoint file")->required();
    analyze->add_option("--feature", analyze_feature, "feature name")->required();

    CommonArgs plot_args;
    std::string plot_ckpt;
    CLI::App* plot = app.add_subcommand(
        "plot", "SVG scatter of original vs corrected 2-D features");
    add_common(plot, plot_args, true);
    plot->add_option("--checkpoint", plot_ckpt, "checkpoint file")->required();

    CommonArgs compare_args;
    CLI::App* compare = app.add_subcommand(
        "compare", "corrected paired t-test between two experiment configs");
    add_common(compare, compare_args, true);

    try {
        app.parse(argc, argv);
        if (synth->parsed()) return run_synth(synth_args);
        if (train->parsed()) return run_train(train_args);
        if (evaluate->parsed()) return run_evaluate(eval_args, eval_ckpt);
        if (search->parsed()) return run_search(search_args);
        if (probe->parsed()) return run_probe(probe_args, probe_ckpt);
        if (analyze->parsed()) return run_analyze(analyze_args, analyze_ckpt, analyze_feature);
        if (plot->parsed()) return run_plot(plot_args, plot_ckpt);
        if (compare->parsed()) return run_compare(compare_args);
        return 1;
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 1;
    } catch (const IngestError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 1;
    } catch (const StructuralError& e) {
        std::cerr << "shape error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
