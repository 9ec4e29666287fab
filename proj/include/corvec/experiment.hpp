#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "corvec/analyze.hpp"
#include "corvec/checkpoint.hpp"
#include "corvec/dataset.hpp"
#include "corvec/errors.hpp"
#include "corvec/explicit_model.hpp"
#include "corvec/fairnf.hpp"
#include "corvec/folds.hpp"
#include "corvec/metrics.hpp"
#include "corvec/normalize.hpp"
#include "corvec/pairs.hpp"
#include "corvec/rng.hpp"

namespace corvec {

/// One concrete hyperparameter setting; lambda drives explicit models, gamma
/// and n_layers drive flow models, the rest apply to both.
struct HyperParams {
    double lambda = 1.0;
    double gamma = 1.0;
    double lr = 0.01;
    int epochs = 60;
    std::size_t batch = 64;
    std::vector<std::size_t> hidden = {16, 16};  // extractor / coupling subnet widths
    std::size_t n_layers = 8;
};

/// Candidate lists for random search; an empty list keeps the base value.
struct HyperSpace {
    std::vector<double> lambda, gamma, lr;
    std::vector<int> epochs;
    std::vector<std::size_t> batch;
    std::vector<std::vector<std::size_t>> hidden;
    std::vector<std::size_t> n_layers;

    bool empty() const {
        return lambda.empty() && gamma.empty() && lr.empty() && epochs.empty() &&
               batch.empty() && hidden.empty() && n_layers.empty();
    }
};

namespace detail {

template <typename T>
void pick_option(const std::vector<T>& options, T& slot, Rng& rng) {
    if (!options.empty()) slot = options[rng.uniform_index(options.size())];
}

}  // namespace detail

inline HyperParams sample_hyper(const HyperSpace& space, const HyperParams& base,
                                Rng& rng) {
    HyperParams h = base;
    detail::pick_option(space.lambda, h.lambda, rng);
    detail::pick_option(space.gamma, h.gamma, rng);
    detail::pick_option(space.lr, h.lr, rng);
    detail::pick_option(space.epochs, h.epochs, rng);
    detail::pick_option(space.batch, h.batch, rng);
    detail::pick_option(space.hidden, h.hidden, rng);
    detail::pick_option(space.n_layers, h.n_layers, rng);
    return h;
}

struct SearchResult {
    std::size_t best_index = 0;
    HyperParams best;
    std::vector<HyperParams> sampled;
    std::vector<double> objective;
};

/// Seeded random search: draws `budget` settings, scores each with the
/// supplied objective (higher is better), returns the argmax; ties go to the
/// earlier draw.
template <typename F>
SearchResult random_search(const HyperSpace& space, const HyperParams& base,
                           std::size_t budget, std::uint64_t seed, F&& objective) {
    if (space.empty()) throw ConfigError("random_search: empty hyperparameter space");
    if (budget < 1) throw ConfigError("random_search: budget must be >= 1");
    Rng rng(seed);
    SearchResult res;
    for (std::size_t t = 0; t < budget; ++t) {
        HyperParams h = sample_hyper(space, base, rng);
        res.sampled.push_back(h);
        res.objective.push_back(objective(h));
        if (res.objective[t] > res.objective[res.best_index]) res.best_index = t;
    }
    res.best = res.sampled[res.best_index];
    return res;
}

struct ExperimentConfig {
    std::string dataset_path, schema_path;
    ModelKind model = ModelKind::AdvCls;
    TaskKind task = TaskKind::Cls;
    HyperParams hyper;
    HyperSpace space;  // empty: train with `hyper` as given
    std::uint64_t seed = 0;
    std::size_t runs = 1;
    std::size_t internal_folds = 3, external_folds = 3;
    std::string objective;  // filled from task when blank
    std::size_t search_budget = 30;
    int protected_group = 1;  // reference group for ranking-prefix fairness
    int pivot_group = 0;      // distribution all groups map onto (flow models)
    std::size_t ndcg_k = 10;
    std::size_t pair_budget = 2000;
};

inline std::string objective_name_for(TaskKind task) {
    return task == TaskKind::Cls ? "1-AUDC" : "1-rND";
}

inline void validate_config(ExperimentConfig& cfg) {
    if (cfg.objective.empty()) cfg.objective = objective_name_for(cfg.task);
    if (cfg.objective != objective_name_for(cfg.task))
        throw ConfigError("experiment config: objective '" + cfg.objective +
                          "' does not match task '" + to_string(cfg.task) + "'");
    if (cfg.internal_folds < 2 || cfg.external_folds < 2)
        throw ConfigError("experiment config: fold counts must be >= 2");
    if (cfg.runs < 1) throw ConfigError("experiment config: runs must be >= 1");
    if (!is_flow_kind(cfg.model) && cfg.model == ModelKind::AdvCls &&
        cfg.task != TaskKind::Cls)
        throw ConfigError("experiment config: advcls requires the cls task");
    if (cfg.model == ModelKind::AdvDr && cfg.task != TaskKind::Rank)
        throw ConfigError("experiment config: advdr requires the rank task");
}

namespace detail {

inline nlohmann::ordered_json hyper_to_json(const HyperParams& h) {
    nlohmann::ordered_json j;
    j["lambda"] = h.lambda;
    j["gamma"] = h.gamma;
    j["lr"] = h.lr;
    j["epochs"] = h.epochs;
    j["batch"] = h.batch;
    j["hidden"] = h.hidden;
    j["n_layers"] = h.n_layers;
    return j;
}

inline HyperParams hyper_from_json(const nlohmann::ordered_json& j, const HyperParams& base) {
    HyperParams h = base;
    h.lambda = j.value("lambda", h.lambda);
    h.gamma = j.value("gamma", h.gamma);
    h.lr = j.value("lr", h.lr);
    h.epochs = j.value("epochs", h.epochs);
    h.batch = j.value("batch", h.batch);
    h.hidden = j.value("hidden", h.hidden);
    h.n_layers = j.value("n_layers", h.n_layers);
    return h;
}

inline nlohmann::ordered_json space_to_json(const HyperSpace& s) {
    nlohmann::ordered_json j;
    if (!s.lambda.empty()) j["lambda"] = s.lambda;
    if (!s.gamma.empty()) j["gamma"] = s.gamma;
    if (!s.lr.empty()) j["lr"] = s.lr;
    if (!s.epochs.empty()) j["epochs"] = s.epochs;
    if (!s.batch.empty()) j["batch"] = s.batch;
    if (!s.hidden.empty()) j["hidden"] = s.hidden;
    if (!s.n_layers.empty()) j["n_layers"] = s.n_layers;
    return j;
}

inline HyperSpace space_from_json(const nlohmann::ordered_json& j) {
    HyperSpace s;
    if (j.contains("lambda")) s.lambda = j.at("lambda").get<std::vector<double>>();
    if (j.contains("gamma")) s.gamma = j.at("gamma").get<std::vector<double>>();
    if (j.contains("lr")) s.lr = j.at("lr").get<std::vector<double>>();
    if (j.contains("epochs")) s.epochs = j.at("epochs").get<std::vector<int>>();
    if (j.contains("batch")) s.batch = j.at("batch").get<std::vector<std::size_t>>();
    if (j.contains("hidden"))
        s.hidden = j.at("hidden").get<std::vector<std::vector<std::size_t>>>();
    if (j.contains("n_layers"))
        s.n_layers = j.at("n_layers").get<std::vector<std::size_t>>();
    return s;
}

}  // namespace detail

inline nlohmann::ordered_json experiment_config_to_json(const ExperimentConfig& cfg) {
    nlohmann::ordered_json j;
    j["dataset"] = cfg.dataset_path;
    j["schema"] = cfg.schema_path;
    j["model"] = to_string(cfg.model);
    j["task"] = to_string(cfg.task);
    j["objective"] = cfg.objective.empty() ? objective_name_for(cfg.task) : cfg.objective;
    j["seed"] = cfg.seed;
    j["runs"] = cfg.runs;
    j["internal_folds"] = cfg.internal_folds;
    j["external_folds"] = cfg.external_folds;
    j["search_budget"] = cfg.search_budget;
    j["protected_group"] = cfg.protected_group;
    j["pivot_group"] = cfg.pivot_group;
    j["ndcg_k"] = cfg.ndcg_k;
    j["pair_budget"] = cfg.pair_budget;
    j["hyper"] = detail::hyper_to_json(cfg.hyper);
    j["space"] = detail::space_to_json(cfg.space);
    return j;
}

inline ExperimentConfig experiment_config_from_json(const nlohmann::ordered_json& j) {
    ExperimentConfig cfg;
    cfg.dataset_path = j.value("dataset", "");
    cfg.schema_path = j.value("schema", "");
    if (j.contains("model")) cfg.model = model_kind_from(j.at("model").get<std::string>());
    if (j.contains("task")) cfg.task = task_kind_from(j.at("task").get<std::string>());
    cfg.objective = j.value("objective", "");
    cfg.seed = j.value("seed", cfg.seed);
    cfg.runs = j.value("runs", cfg.runs);
    cfg.internal_folds = j.value("internal_folds", cfg.internal_folds);
    cfg.external_folds = j.value("external_folds", cfg.external_folds);
    cfg.search_budget = j.value("search_budget", cfg.search_budget);
    cfg.protected_group = j.value("protected_group", cfg.protected_group);
    cfg.pivot_group = j.value("pivot_group", cfg.pivot_group);
    cfg.ndcg_k = j.value("ndcg_k", cfg.ndcg_k);
    cfg.pair_budget = j.value("pair_budget", cfg.pair_budget);
    if (j.contains("hyper")) cfg.hyper = detail::hyper_from_json(j.at("hyper"), cfg.hyper);
    if (j.contains("space")) cfg.space = detail::space_from_json(j.at("space"));
    validate_config(cfg);
    return cfg;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IngestError("cannot open config '" + path + "'");
    nlohmann::ordered_json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw IngestError("config '" + path + "': " + e.what());
    }
    return experiment_config_from_json(j);
}

inline std::string config_hash(const ExperimentConfig& cfg) {
    std::string text = experiment_config_to_json(cfg).dump();
    std::uint64_t h = 1469598103934665603ULL;  // FNV-1a over the canonical dump
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    static const char* hex = "0123456789abcdef";
    for (int i = 15; i >= 0; --i) {
        buf[i] = hex[h & 0xf];
        h >>= 4;
    }
    buf[16] = '\0';
    return std::string(buf);
}

struct FoldMetrics {
    std::size_t fold = 0;
    std::map<std::string, double> values;  // sorted keys keep reports stable
};

struct RunRecord {
    std::string config_hash;
    std::uint64_t seed = 0;  // derived per-run stream seed
    std::string objective_name;
    HyperParams chosen;
    std::vector<FoldMetrics> folds;
    std::vector<std::string> checkpoint_paths;
    double wall_seconds = 0.0;  // in-memory only; kept out of reports
};

namespace detail {

inline NormKind model_norm_kind(const Dataset& ds) {
    for (const FeatureMeta& f : ds.features)
        if (f.norm != NormKind::Minmax) return NormKind::Standard;
    return NormKind::Minmax;
}

// unseen rows can overshoot a train-fitted minmax range; the model contract
// wants [0,1], so clip before feeding it
inline void clamp_minmax_columns(const NormalizationSpec& spec, Tensor& X) {
    for (std::size_t c = 0; c < spec.dim(); ++c) {
        if (spec.cols[c].kind != NormKind::Minmax) continue;
        for (std::size_t r = 0; r < X.rows; ++r)
            X.at(r, c) = std::clamp(X.at(r, c), 0.0, 1.0);
    }
}

inline FairNFVariant variant_for(ModelKind kind) {
    switch (kind) {
        case ModelKind::FairnfBase: return FairNFVariant::Base;
        case ModelKind::FairnfFpr: return FairNFVariant::Fpr;
        default: return FairNFVariant::Bce;
    }
}

}  // namespace detail

/// Fits the normalizer on the given split, trains the configured model on it,
/// and packages both as a checkpoint.
inline Checkpoint train_model(const ExperimentConfig& cfg, const HyperParams& h,
                              const Dataset& train, std::uint64_t seed) {
    Checkpoint ckpt;
    ckpt.kind = cfg.model;
    Rng rng(mix_seed(seed, 11));
    if (!is_flow_kind(cfg.model)) {
        std::vector<NormKind> kinds;
        for (const FeatureMeta& f : train.features) kinds.push_back(f.norm);
        NormalizationSpec spec = fit_normalizer(train.X, kinds);
        Dataset tn = train;
        tn.X = apply_normalization(spec, train.X);
        ExplicitModel m =
            build_explicit(train.dim(), h.hidden, detail::model_norm_kind(train),
                           cfg.task, std::max(2, train.group_count()), rng);
        ExplicitTrainConfig tc;
        tc.lambda = h.lambda;
        tc.lr = h.lr;
        tc.epochs = h.epochs;
        tc.batch = h.batch;
        tc.seed = mix_seed(seed, 12);
        if (cfg.task == TaskKind::Cls) {
            train_advcls(m, tn, tc);
        } else {
            std::vector<RankPair> pairs =
                make_pairs(tn, cfg.pair_budget, mix_seed(seed, 13));
            train_advdr(m, tn, pairs, tc);
        }
        ckpt.norm = spec;
        for (std::size_t c = 0; c < train.features.size(); ++c) {
            ckpt.feature_names.push_back(train.features[c].name);
            ckpt.columns.push_back(c);
        }
        ckpt.explicit_model = std::move(m);
    } else {
        std::vector<std::size_t> cols = train.flow_columns();
        if (cols.size() < 2)
            throw ConfigError("train_model: flow models need at least 2 continuous features");
        Tensor Xf = train.flow_view();
        std::vector<NormKind> kinds;
        for (std::size_t c : cols) kinds.push_back(train.features[c].norm);
        NormalizationSpec spec = fit_normalizer(Xf, kinds);
        Tensor Xn = apply_normalization(spec, Xf);
        FairNFConfig fc;
        fc.variant = detail::variant_for(cfg.model);
        fc.task = cfg.task;
        fc.gamma = h.gamma;
        fc.pivot_group = cfg.pivot_group;
        fc.n_layers = h.n_layers;
        fc.subnet_hidden = h.hidden;
        fc.lr = h.lr;
        fc.epochs = h.epochs;
        fc.batch = h.batch;
        fc.seed = mix_seed(seed, 12);
        FairNFModel m = build_fairnf(cols.size(), fc, rng);
        std::vector<RankPair> pairs;
        if (cfg.task == TaskKind::Rank)
            pairs = make_pairs(train, cfg.pair_budget, mix_seed(seed, 13));
        train_fairnf(m, train, Xn, pairs, fc);
        ckpt.norm = spec;
        for (std::size_t c : cols) {
            ckpt.feature_names.push_back(train.features[c].name);
            ckpt.columns.push_back(c);
        }
        ckpt.flow_model = std::move(m);
    }
    return ckpt;
}

/// Task-head scores for any checkpointed model on a raw-unit dataset.
inline std::vector<double> model_scores(const Checkpoint& ckpt, const Dataset& ds) {
    if (ckpt.explicit_model) {
        Tensor Xn = apply_normalization(ckpt.norm, ds.X);
        detail::clamp_minmax_columns(ckpt.norm, Xn);
        return predict_scores(*ckpt.explicit_model, Xn);
    }
    if (!ckpt.flow_model) throw ConfigError("model_scores: checkpoint holds no model");
    Tensor Xf(ds.n(), ckpt.columns.size());
    for (std::size_t r = 0; r < ds.n(); ++r)
        for (std::size_t c = 0; c < ckpt.columns.size(); ++c)
            Xf.at(r, c) = ds.X.at(r, ckpt.columns[c]);
    Tensor Xn = apply_normalization(ckpt.norm, Xf);
    return fairnf_predict(*ckpt.flow_model, Xn);
}

/// The representation a fairness probe should attack: corrected features for
/// explicit models, the pivot-mapped view for flow models. Normalized units.
inline Tensor model_representation(const Checkpoint& ckpt, const Dataset& ds) {
    if (ckpt.explicit_model) {
        Tensor Xn = apply_normalization(ckpt.norm, ds.X);
        detail::clamp_minmax_columns(ckpt.norm, Xn);
        return correct(*ckpt.explicit_model, Xn).Z;
    }
    if (!ckpt.flow_model)
        throw ConfigError("model_representation: checkpoint holds no model");
    Tensor Xf(ds.n(), ckpt.columns.size());
    for (std::size_t r = 0; r < ds.n(); ++r)
        for (std::size_t c = 0; c < ckpt.columns.size(); ++c)
            Xf.at(r, c) = ds.X.at(r, ckpt.columns[c]);
    Tensor Xn = apply_normalization(ckpt.norm, Xf);
    return fair_transform(*ckpt.flow_model, Xn);
}

inline std::map<std::string, double> evaluate_model(const Checkpoint& ckpt,
                                                    const Dataset& ds,
                                                    const ExperimentConfig& cfg) {
    std::vector<double> scores = model_scores(ckpt, ds);
    std::map<std::string, double> vals;
    if (cfg.task == TaskKind::Cls) {
        vals["auc"] = auc(scores, ds.y);
        vals["audc"] = audc(scores, ds.s);
        vals["gpa"] = gpa_cls(scores, ds.y, ds.s, 0.5);
        vals["objective"] = 1.0 - vals["audc"];
    } else {
        RankedList list = make_ranked_list(scores, ds.y, ds.s);
        vals["ndcg"] = ndcg_at_k(list, std::min(cfg.ndcg_k, list.n()));
        vals["rnd"] = rnd(list, cfg.protected_group);
        vals["gpa"] = gpa_rank(scores, ds.y, ds.s).difference.value_or(0.0);
        vals["objective"] = 1.0 - vals["rnd"];
    }
    return vals;
}

namespace detail {

template <typename F>
auto with_run_context(const std::string& context, F&& fn) {
    try {
        return fn();
    } catch (const ConfigError& e) {
        throw ConfigError(context + ": " + e.what());
    } catch (const IngestError& e) {
        throw IngestError(context + ": " + e.what());
    } catch (const StructuralError& e) {
        throw StructuralError(context + ": " + e.what());
    } catch (const NumericError& e) {
        throw NumericError(context + ": " + e.what());
    }
}

}  // namespace detail

/// Nested-fold protocol: when a search space is given, hyperparameters are
/// chosen by mean objective over the internal folds, then each external fold
/// is scored by a model trained on the remaining rows. One record per run,
/// with run r seeded from hash(config seed, r).
inline std::vector<RunRecord> run_experiment(ExperimentConfig cfg, const Dataset& ds,
                                             const std::string& out_dir = "") {
    validate_config(cfg);
    std::string hash = config_hash(cfg);
    std::vector<RunRecord> records;
    for (std::size_t run = 0; run < cfg.runs; ++run) {
        std::uint64_t run_seed = mix_seed(cfg.seed, run);
        std::string run_tag = "run " + std::to_string(run);
        RunRecord rec;
        rec.config_hash = hash;
        rec.seed = run_seed;
        rec.objective_name = cfg.objective;
        FoldPlan plan = make_folds(ds.n(), cfg.internal_folds, cfg.external_folds,
                                   mix_seed(run_seed, 1));

        rec.chosen = cfg.hyper;
        if (!cfg.space.empty()) {
            std::size_t trial = 0;
            auto internal_objective = [&](const HyperParams& h) {
                double total = 0.0;
                for (std::size_t f = 0; f < plan.internal_folds.size(); ++f) {
                    Dataset train = select_rows(
                        ds, fold_complement(plan.internal_folds, f));
                    Dataset held = select_rows(ds, plan.internal_folds[f]);
                    Checkpoint ckpt = train_model(
                        cfg, h, train, mix_seed(run_seed, 10000 + trial * 64 + f));
                    total += evaluate_model(ckpt, held, cfg).at("objective");
                }
                ++trial;
                return total / static_cast<double>(plan.internal_folds.size());
            };
            SearchResult sr = detail::with_run_context(run_tag + " search", [&] {
                return random_search(cfg.space, cfg.hyper, cfg.search_budget,
                                     mix_seed(run_seed, 2), internal_objective);
            });
            rec.chosen = sr.best;
        }

        for (std::size_t f = 0; f < plan.external_folds.size(); ++f) {
            std::string tag = run_tag + " external fold " + std::to_string(f);
            Dataset train = select_rows(ds, fold_complement(plan.external_folds, f));
            Dataset held = select_rows(ds, plan.external_folds[f]);
            Checkpoint ckpt = detail::with_run_context(tag, [&] {
                return train_model(cfg, rec.chosen, train, mix_seed(run_seed, 100 + f));
            });
            FoldMetrics fm;
            fm.fold = f;
            fm.values = detail::with_run_context(tag, [&] {
                return evaluate_model(ckpt, held, cfg);
            });
            rec.folds.push_back(std::move(fm));
            if (!out_dir.empty()) {
                std::string path = out_dir + "/run" + std::to_string(run) + "_fold" +
                                   std::to_string(f) + ".json";
                save_checkpoint(ckpt, path);
                rec.checkpoint_paths.push_back(path);
            }
        }
        records.push_back(std::move(rec));
    }
    return records;
}

inline std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg,
                                             const std::string& out_dir = "") {
    if (cfg.dataset_path.empty() || cfg.schema_path.empty())
        throw ConfigError("run_experiment: config needs dataset and schema paths");
    Dataset ds = load_csv(cfg.dataset_path, load_schema(cfg.schema_path));
    return run_experiment(cfg, ds, out_dir);
}

inline nlohmann::ordered_json run_record_to_json(const RunRecord& rec) {
    nlohmann::ordered_json j;
    j["config_hash"] = rec.config_hash;
    j["seed"] = rec.seed;
    j["objective"] = rec.objective_name;
    j["hyper"] = detail::hyper_to_json(rec.chosen);
    nlohmann::ordered_json folds = nlohmann::ordered_json::array();
    for (const FoldMetrics& fm : rec.folds) {
        nlohmann::ordered_json jf;
        jf["fold"] = fm.fold;
        for (const auto& [k, v] : fm.values) jf[k] = v;
        folds.push_back(jf);
    }
    j["folds"] = folds;
    j["checkpoints"] = rec.checkpoint_paths;
    return j;
}

inline nlohmann::ordered_json run_records_to_json(const std::vector<RunRecord>& recs) {
    nlohmann::ordered_json j;
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const RunRecord& r : recs) arr.push_back(run_record_to_json(r));
    j["records"] = arr;
    return j;
}

inline std::string run_records_to_csv(const std::vector<RunRecord>& recs) {
    std::vector<std::string> keys;
    if (!recs.empty() && !recs.front().folds.empty())
        for (const auto& [k, v] : recs.front().folds.front().values) keys.push_back(k);
    std::string out = "run,seed,fold";
    for (const std::string& k : keys) out += "," + k;
    out += "\n";
    for (std::size_t r = 0; r < recs.size(); ++r) {
        for (const FoldMetrics& fm : recs[r].folds) {
            out += std::to_string(r) + "," + std::to_string(recs[r].seed) + "," +
                   std::to_string(fm.fold);
            for (const std::string& k : keys) out += "," + format_double(fm.values.at(k));
            out += "\n";
        }
    }
    return out;
}

inline void write_run_reports(const std::vector<RunRecord>& recs,
                              const std::string& out_dir) {
    std::ofstream jf(out_dir + "/report.json", std::ios::binary);
    if (!jf) throw IngestError("cannot write '" + out_dir + "/report.json'");
    jf << run_records_to_json(recs).dump(2) << "\n";
    std::ofstream cf(out_dir + "/metrics.csv", std::ios::binary);
    if (!cf) throw IngestError("cannot write '" + out_dir + "/metrics.csv'");
    cf << run_records_to_csv(recs);
}

struct SweepRow {
    double threshold = 0.0;
    double accuracy = 0.0;
    double discrimination = 0.0;
};

/// Accuracy/discrimination tradeoff of one score vector over the fixed
/// 20-threshold grid used by the mean-discrimination metric.
inline std::vector<SweepRow> audc_threshold_sweep(const std::vector<double>& scores,
                                                  const std::vector<double>& labels,
                                                  const std::vector<int>& group) {
    if (scores.size() != labels.size() || scores.size() != group.size())
        throw StructuralError("audc_threshold_sweep: length mismatch");
    for (double v : scores)
        if (!(v >= 0.0 && v <= 1.0))
            throw ConfigError("audc_threshold_sweep: scores must lie in [0,1]");
    std::vector<SweepRow> rows;
    for (double t : audc_thresholds()) {
        SweepRow row;
        row.threshold = t;
        double hits = 0.0;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            double pred = scores[i] >= t ? 1.0 : 0.0;
            if (pred == labels[i]) hits += 1.0;
        }
        row.accuracy = scores.empty() ? 0.0 : hits / static_cast<double>(scores.size());
        row.discrimination = y_discrim(scores, group, t);
        rows.push_back(row);
    }
    return rows;
}

}  // namespace corvec
