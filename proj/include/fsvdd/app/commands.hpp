#pragma once

// Library entry points behind the command-line subcommands. Each takes the
// merged JSON configuration (flags already applied) and returns what the
// command prints or writes.

#include "fsvdd/app/config.hpp"
#include "fsvdd/eval.hpp"
#include "fsvdd/focus_svdd.hpp"
#include "fsvdd/io.hpp"
#include "fsvdd/nn/amplitude_stats.hpp"
#include "fsvdd/nn/training.hpp"
#include "fsvdd/synth_data.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace fsvdd::app {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// generate

inline Json to_json(const synth::GeneratorConfig& c) {
    Json clusters = Json::array();
    for (const auto& cl : c.clusters) {
        Json targets = Json::array();
        for (const auto& t : cl.targets) targets.push_back({{"a", t.a}, {"w", t.w}, {"phi", t.phi}});
        clusters.push_back({{"targets", targets}, {"sigma_a", cl.sigma_a}, {"sigma_w", cl.sigma_w}, {"sigma_phi", cl.sigma_phi}});
    }
    return Json{{"length", c.length},
                {"clusters", clusters},
                {"defect",
                 {{"target_index", c.defect.target_index},
                  {"factor_min", c.defect.factor_min},
                  {"factor_max", c.defect.factor_max},
                  {"mode", c.defect.mode == synth::DefectMode::reflectivity ? "reflectivity" : "delay"}}},
                {"noise_sigma", c.noise_sigma},
                {"counts",
                 {{"train", c.counts.train},
                  {"val", c.counts.val},
                  {"test_healthy", c.counts.test_healthy},
                  {"test_abnormal", c.counts.test_abnormal}}},
                {"seed", c.seed},
                {"n_folds", c.n_folds}};
}

/// Missing keys keep the built-in defaults.
inline synth::GeneratorConfig generator_config_from_json(const Json& j, std::uint64_t seed) {
    const std::string w = "generate";
    check_keys(j, {"output", "analytic_output", "length", "clusters", "defect", "noise_sigma", "counts", "seed", "n_folds"},
               w);
    auto cfg = synth::default_generator_config();
    cfg.seed = seed;
    cfg.length = get_or<Eigen::Index>(j, "length", cfg.length, w);
    cfg.noise_sigma = get_or<double>(j, "noise_sigma", cfg.noise_sigma, w);
    cfg.n_folds = get_or<size_t>(j, "n_folds", cfg.n_folds, w);
    if (j.contains("counts")) {
        const auto& c = j["counts"];
        check_keys(c, {"train", "val", "test_healthy", "test_abnormal"}, w + ".counts");
        cfg.counts.train = get_or<size_t>(c, "train", cfg.counts.train, w);
        cfg.counts.val = get_or<size_t>(c, "val", cfg.counts.val, w);
        cfg.counts.test_healthy = get_or<size_t>(c, "test_healthy", cfg.counts.test_healthy, w);
        cfg.counts.test_abnormal = get_or<size_t>(c, "test_abnormal", cfg.counts.test_abnormal, w);
    }
    if (j.contains("defect")) {
        const auto& d = j["defect"];
        check_keys(d, {"target_index", "factor_min", "factor_max", "mode"}, w + ".defect");
        cfg.defect.target_index = get_or<size_t>(d, "target_index", cfg.defect.target_index, w);
        cfg.defect.factor_min = get_or<double>(d, "factor_min", cfg.defect.factor_min, w);
        cfg.defect.factor_max = get_or<double>(d, "factor_max", cfg.defect.factor_max, w);
        const auto mode = get_or<std::string>(d, "mode", "reflectivity", w);
        if (mode == "reflectivity") {
            cfg.defect.mode = synth::DefectMode::reflectivity;
        } else if (mode == "delay") {
            cfg.defect.mode = synth::DefectMode::delay;
        } else {
            throw ConfigError("generate.defect: mode must be 'reflectivity' or 'delay'");
        }
    }
    if (j.contains("clusters")) {
        if (!j["clusters"].is_array()) throw ConfigError("generate: 'clusters' must be an array");
        cfg.clusters.clear();
        for (const auto& cj : j["clusters"]) {
            check_keys(cj, {"targets", "sigma_a", "sigma_w", "sigma_phi"}, w + ".clusters[]");
            synth::Cluster cl;
            cl.sigma_a = get_or<double>(cj, "sigma_a", 0.0, w);
            cl.sigma_w = get_or<double>(cj, "sigma_w", 0.0, w);
            cl.sigma_phi = get_or<double>(cj, "sigma_phi", 0.0, w);
            if (!cj.contains("targets") || !cj["targets"].is_array()) throw ConfigError("generate: cluster needs 'targets'");
            for (const auto& tj : cj["targets"]) {
                check_keys(tj, {"a", "w", "phi"}, w + ".clusters[].targets[]");
                cl.targets.push_back({require<double>(tj, "a", w), require<double>(tj, "w", w), get_or<double>(tj, "phi", 0.0, w)});
            }
            cfg.clusters.push_back(std::move(cl));
        }
    }
    synth::validate(cfg);
    return cfg;
}

struct GenerateResult {
    fs::path samples;
    fs::path meta;
    fs::path manifest;
    std::optional<fs::path> analytic;
    size_t n_signals = 0;
    std::string content_hash;
};

inline GenerateResult cmd_generate(const Json& cfg, std::optional<std::uint64_t> seed_flag) {
    const auto seed = resolve_seed(seed_flag, cfg);
    const auto gen = generator_config_from_json(cfg, seed);
    const fs::path out = require<std::string>(cfg, "output", "generate");
    const auto ds = synth::generate(gen);
    const auto text = io::format_dataset(ds.signals);

    GenerateResult r;
    r.samples = out;
    r.meta = io::meta_path_for(out);
    r.manifest = fs::path(out).replace_extension(".manifest.json");
    r.n_signals = ds.signals.size();
    r.content_hash = io::sha256_hex(text.samples + text.meta);
    io::write_file(r.samples, text.samples);
    io::write_file(r.meta, text.meta);
    Json files{{"samples", r.samples.filename().string()}, {"meta", r.meta.filename().string()}};
    if (cfg.contains("analytic_output")) {
        r.analytic = fs::path(require<std::string>(cfg, "analytic_output", "generate"));
        io::write_file(*r.analytic, io::format_analytic_dataset(ds.signals));
        files["analytic"] = r.analytic->filename().string();
    }
    const Json manifest{{"config", to_json(gen)},
                        {"files", files},
                        {"n_signals", r.n_signals},
                        {"content_hash", {{"algorithm", "sha256"}, {"value", r.content_hash}}}};
    io::write_file(r.manifest, io::dump(manifest));
    return r;
}

// ---------------------------------------------------------------------------
// Dataset selection and model inputs

/// Signals of a named split ("train", "val", "test") from the split meta
/// entry, or of one fold's train/val set when `fold` is given.
inline std::vector<IFSignal> select_split(const std::vector<IFSignal>& all, const std::string& split,
                                          std::optional<int> fold, size_t n_folds) {
    std::vector<IFSignal> out;
    if (fold) {
        if (*fold < 0 || static_cast<size_t>(*fold) >= n_folds) throw ConfigError("fold out of range");
        const auto plan = eval::make_fold_plan(all, n_folds);
        const auto& f = plan.folds[static_cast<size_t>(*fold)];
        const auto& idx = split == "train" ? f.train : split == "val" ? f.val : f.test_healthy;
        for (auto i : idx) out.push_back(all[i]);
        if (split == "test")
            for (auto i : plan.abnormal) out.push_back(all[i]);
        return out;
    }
    for (const auto& s : all) {
        auto it = s.meta.find("split");
        if (it != s.meta.end() && it->second == split) out.push_back(s);
    }
    for (const auto& s : out)
        if (split != "test" && s.label != Label::healthy)
            throw DataError("split '" + split + "' contains a non-healthy sample");
    if (out.empty()) throw DataError("dataset has no '" + split + "' samples (split metadata missing?)");
    return out;
}

/// Model inputs from dataset rows: L columns are raw sweeps, 2L columns are
/// analytic signals (accepted by analytic models only).
template <Field T>
std::vector<Vector<T>> model_inputs(const io::RawDataset& ds, const Standardizer& st, Representation rep,
                                    Eigen::Index input_dim) {
    std::vector<Vector<T>> out;
    if (ds.rows.empty()) return out;
    const auto cols = static_cast<Eigen::Index>(ds.rows.front().size());
    if (cols == 2 * input_dim) {
        if (rep != Representation::analytic)
            throw DataError("representation mismatch: analytic data given to a '" + std::string(to_string(rep)) +
                            "' model");
        if constexpr (is_complex_v<T>) {
            for (auto& z : io::to_analytic_rows(ds)) out.push_back(standardize(AnalyticSignal{z}, st).samples);
            return out;
        }
    }
    if (cols != input_dim)
        throw DataError("dataset has " + std::to_string(cols) + " columns, model expects " + std::to_string(input_dim));
    for (const auto& s : io::to_signals(ds)) {
        if constexpr (is_complex_v<T>) {
            out.push_back(to_analytic_representation(s, st));
        } else {
            out.push_back(to_real_representation(s, st, rep));
        }
    }
    return out;
}

template <Field T>
std::vector<Vector<T>> model_inputs(const std::vector<IFSignal>& signals, const Standardizer& st, Representation rep) {
    std::vector<Vector<T>> out;
    for (const auto& s : signals) {
        if constexpr (is_complex_v<T>) {
            out.push_back(to_analytic_representation(s, st));
        } else {
            out.push_back(to_real_representation(s, st, rep));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// train

struct TrainResult {
    fs::path output;
    Representation representation = Representation::real;
    nn::TrainReport report;
};

inline TrainResult cmd_train(const Json& cfg, std::optional<std::uint64_t> seed_flag) {
    const std::string w = "train";
    check_keys(cfg,
               {"data", "output", "representation", "activation", "hidden", "per_node_b", "b_init", "standardization",
                "epochs", "batch_size", "learning_rate", "optimizer", "seed", "fold", "n_folds"},
               w);
    const auto seed = resolve_seed(seed_flag, cfg);
    const auto rep = representation_from_string(get_or<std::string>(cfg, "representation", "real", w));
    const auto act = nn::activation_from_string(
        get_or<std::string>(cfg, "activation", rep == Representation::analytic ? "ead" : "relu", w));
    nn::TrainConfig tc;
    tc.epochs = get_or<int>(cfg, "epochs", tc.epochs, w);
    tc.batch_size = get_or<int>(cfg, "batch_size", tc.batch_size, w);
    tc.learning_rate = get_or<double>(cfg, "learning_rate", tc.learning_rate, w);
    tc.optimizer = nn::optimizer_from_string(get_or<std::string>(cfg, "optimizer", "adam", w));
    tc.seed = eval::mix_seed(seed, 7);
    nn::validate(tc);
    const auto standardization = get_or<std::string>(cfg, "standardization", "global", w);
    if (standardization != "global" && standardization != "binwise")
        throw ConfigError("train: standardization must be 'global' or 'binwise'");
    if (standardization == "binwise" && rep == Representation::analytic)
        throw ConfigError("train: binwise standardization is not available for the analytic representation");
    std::optional<int> fold;
    if (cfg.contains("fold")) fold = get_or<int>(cfg, "fold", 0, w);
    const auto n_folds = get_or<size_t>(cfg, "n_folds", 5, w);

    const auto all = io::load_signals(require<std::string>(cfg, "data", w));
    const auto x_train = select_split(all, "train", fold, n_folds);
    const Standardizer st = standardization == "binwise" ? fit_binwise_standardizer(x_train) : fit_standardizer(x_train);

    nn::ArchitectureConfig arch;
    arch.input_dim = x_train.front().samples.size();
    arch.hidden = get_or<std::vector<Eigen::Index>>(cfg, "hidden", arch.hidden, w);
    arch.activation = act;
    arch.per_node_b = get_or<bool>(cfg, "per_node_b", false, w);
    arch.b_init = get_or<double>(cfg, "b_init", arch.b_init, w);
    arch.seed = seed;

    TrainResult r;
    r.output = require<std::string>(cfg, "output", w);
    r.representation = rep;
    Json ae_doc;
    auto run = [&]<class T>() {
        auto ae = nn::make_autoencoder<T>(arch);
        const auto xs = model_inputs<T>(x_train, st, rep);
        r.report = nn::train(ae, xs, tc);
        ae_doc = io::to_json(ae);
    };
    if (rep == Representation::analytic) {
        run.template operator()<Complex>();
    } else {
        run.template operator()<double>();
    }
    const Json doc{{"kind", "autoencoder_model"},
                   {"representation_tag", std::string(to_string(rep))},
                   {"standardizer", io::to_json(st)},
                   {"autoencoder", ae_doc},
                   {"train_report",
                    {{"initial_loss", r.report.initial_loss},
                     {"final_loss", r.report.final_loss},
                     {"epochs", tc.epochs},
                     {"batch_size", tc.batch_size},
                     {"learning_rate", tc.learning_rate},
                     {"optimizer", std::string(nn::to_string(tc.optimizer))}}},
                   {"seed", seed}};
    io::write_file(r.output, io::dump(doc));
    return r;
}

// ---------------------------------------------------------------------------
// fit

struct FitResult {
    fs::path output;
    double gamma = 0.0;
    bool gamma_fallback = false;
    double density_limit = 0.0;
    double corrected_limit = 0.0;
    double m_train = 0.0;
    double m_val = 0.0;
};

inline std::vector<double> gamma_grid_from(const Json& cfg, const std::string& w) {
    std::vector<double> grid = svdd::default_gamma_grid();
    if (cfg.contains("gamma") && cfg.contains("gamma_grid")) throw ConfigError(w + ": give 'gamma' or 'gamma_grid', not both");
    if (cfg.contains("gamma")) grid = {get_or<double>(cfg, "gamma", 1.0, w)};
    if (cfg.contains("gamma_grid")) grid = get_or<std::vector<double>>(cfg, "gamma_grid", grid, w);
    if (grid.empty()) throw ConfigError(w + ": empty gamma grid");
    for (double g : grid)
        if (!(g > 0.0) || !std::isfinite(g)) throw ConfigError(w + ": gamma values must be > 0");
    if (!std::is_sorted(grid.begin(), grid.end())) throw ConfigError(w + ": gamma grid must be ascending");
    return grid;
}

inline FitResult cmd_fit(const Json& cfg, std::optional<std::uint64_t> seed_flag) {
    const std::string w = "fit";
    check_keys(cfg,
               {"model", "data", "output", "epsilon", "C", "gamma", "gamma_grid", "selection", "validation", "fold",
                "n_folds", "raw_svdd", "seed"},
               w);
    const auto seed = resolve_seed(seed_flag, cfg);
    const double epsilon = get_or<double>(cfg, "epsilon", 0.05, w);
    if (!(epsilon >= 0.0 && epsilon < 1.0)) throw ConfigError("fit: epsilon must be in [0, 1)");
    const double C = get_or<double>(cfg, "C", 1.0, w);
    const auto grid = gamma_grid_from(cfg, w);
    const auto selection = get_or<std::string>(cfg, "selection", "focus_m", w);
    if (selection != "focus_m" && selection != "focus_r") throw ConfigError("fit: selection must be focus_m or focus_r");
    const auto validation = get_or<std::string>(cfg, "validation", "val", w);
    if (validation != "val" && validation != "train") throw ConfigError("fit: validation must be 'val' or 'train'");
    const bool raw = get_or<bool>(cfg, "raw_svdd", true, w);
    std::optional<int> fold;
    if (cfg.contains("fold")) fold = get_or<int>(cfg, "fold", 0, w);
    const auto n_folds = get_or<size_t>(cfg, "n_folds", 5, w);

    const Json model = io::load_json(require<std::string>(cfg, "model", w));
    if (model.value("kind", "") != "autoencoder_model") throw DataError("fit: 'model' is not an autoencoder model file");
    const auto rep = io::representation_tag(model);
    const auto st = io::standardizer_from_json(model.at("standardizer"));
    const auto all = io::load_signals(require<std::string>(cfg, "data", w));
    const auto x_train_sig = select_split(all, "train", fold, n_folds);
    const auto x_val_sig = validation == "train" ? x_train_sig : select_split(all, "val", fold, n_folds);

    FitResult r;
    r.output = require<std::string>(cfg, "output", w);
    Json doc{{"kind", "focus_model"},
             {"representation_tag", std::string(to_string(rep))},
             {"standardizer", model.at("standardizer")},
             {"autoencoder", model.at("autoencoder")},
             {"epsilon", epsilon},
             {"seed", seed}};
    auto run = [&]<class T>() {
        const auto ae = io::autoencoder_from_json<T>(model.at("autoencoder"));
        const auto x_train = model_inputs<T>(x_train_sig, st, rep);
        const auto x_val = model_inputs<T>(x_val_sig, st, rep);
        const auto r_train = focus::residuals<T>(x_train, ae);
        const auto r_val = focus::residuals<T>(x_val, ae);
        focus::require_nondegenerate<T>(r_train);
        eval::GammaSearch search(std::span<const Vector<T>>(r_train), std::span<const Vector<T>>(r_val), C);
        const auto sel = search.select(selection == "focus_m", epsilon, grid);
        const auto fm = focus::fit_focus_residuals<T>(ae, r_train, r_val, sel.gamma, C, rep);
        r.gamma = sel.gamma;
        r.gamma_fallback = sel.fallback;
        r.density_limit = fm.svdd.density_limit;
        r.corrected_limit = fm.corrected_limit();
        r.m_train = fm.m_train;
        r.m_val = fm.m_val;
        doc["svdd"] = io::to_json(fm.svdd, rep);
        doc["m_train"] = fm.m_train;
        doc["m_val"] = fm.m_val;
        doc["gamma_selection"] = {{"decision", selection}, {"flagged_fraction", sel.flagged_fraction}, {"fallback", sel.fallback}};
        doc["norm_threshold"] = focus::norm_threshold<T>(ae, x_val, epsilon);
        if (raw) {
            eval::GammaSearch raw_search(std::span<const Vector<T>>(x_train), std::span<const Vector<T>>(x_val), C);
            const auto raw_sel = raw_search.select(false, epsilon, grid);
            doc["raw_svdd"] = io::to_json(svdd::fit<T>(x_train, raw_sel.gamma, C).model, rep);
            doc["raw_gamma_selection"] = {{"decision", "svdd"},
                                          {"flagged_fraction", raw_sel.flagged_fraction},
                                          {"fallback", raw_sel.fallback}};
        }
    };
    if (rep == Representation::analytic) {
        run.template operator()<Complex>();
    } else {
        run.template operator()<double>();
    }
    io::write_file(r.output, io::dump(doc));
    return r;
}

// ---------------------------------------------------------------------------
// score

enum class ScoreDecision { norm, svdd, focus_r, focus_m };

inline ScoreDecision score_decision_from_string(std::string_view s) {
    if (s == "norm") return ScoreDecision::norm;
    if (s == "svdd") return ScoreDecision::svdd;
    if (s == "focus_r") return ScoreDecision::focus_r;
    if (s == "focus_m") return ScoreDecision::focus_m;
    throw ConfigError("decision must be one of norm, svdd, focus_r, focus_m");
}

struct ScoreRow {
    std::string id;
    double score = 0.0;  // higher is more abnormal
    int decision = 0;
};

/// Scores every row of a dataset under a focus model file. The score is the
/// residual norm for `norm` and the negated density otherwise.
inline std::vector<ScoreRow> score_rows(const Json& model, const io::RawDataset& data, ScoreDecision decision) {
    if (model.value("kind", "") != "focus_model") throw DataError("score: model is not a focus model file");
    const auto rep = io::representation_tag(model);
    const auto st = io::standardizer_from_json(model.at("standardizer"));
    std::vector<ScoreRow> out;
    auto run = [&]<class T>() {
        const auto ae = io::autoencoder_from_json<T>(model.at("autoencoder"));
        const auto xs = model_inputs<T>(data, st, rep, ae.input_dim);
        if (xs.empty()) return;
        if (decision == ScoreDecision::svdd) {
            if (!model.contains("raw_svdd")) throw DataError("score: model has no raw SVDD boundary");
            const auto m = io::svdd_from_json<T>(model.at("raw_svdd"));
            for (size_t i = 0; i < xs.size(); ++i) {
                const double d = svdd::density(m, xs[i]);
                out.push_back({data.headers[i].meta.at("id"), -d, svdd::decide_density(d, m.density_limit)});
            }
            return;
        }
        const auto rs = focus::residuals<T>(xs, ae);
        if (decision == ScoreDecision::norm) {
            const double thr = model.at("norm_threshold").get<double>();
            for (size_t i = 0; i < rs.size(); ++i) {
                const double n = rs[i].norm();
                out.push_back({data.headers[i].meta.at("id"), n, focus::decide_norm(n, thr)});
            }
            return;
        }
        const auto m = io::svdd_from_json<T>(model.at("svdd"));
        if (decision == ScoreDecision::focus_m && !m.corrected_limit) throw DataError("score: model has no corrected limit");
        const double limit = decision == ScoreDecision::focus_m ? *m.corrected_limit : m.density_limit;
        for (size_t i = 0; i < rs.size(); ++i) {
            const double d = svdd::density(m, rs[i]);
            out.push_back({data.headers[i].meta.at("id"), -d, svdd::decide_density(d, limit)});
        }
    };
    if (rep == Representation::analytic) {
        run.template operator()<Complex>();
    } else {
        run.template operator()<double>();
    }
    return out;
}

inline std::string format_scores(const std::vector<ScoreRow>& rows) {
    std::string out = "id,score,decision\n";
    for (const auto& r : rows) out += r.id + "," + io::format_double(r.score) + "," + std::to_string(r.decision) + "\n";
    return out;
}

inline std::string cmd_score(const fs::path& model_path, const fs::path& data_path, std::string_view decision) {
    const auto d = score_decision_from_string(decision);
    const Json model = io::load_json(model_path);
    return format_scores(score_rows(model, io::load_dataset(data_path), d));
}

// ---------------------------------------------------------------------------
// evaluate

inline std::string format_report_csv(const eval::EvalReport& rep) {
    std::string out =
        "variant,decision,status,n_folds,f1_mean,f1_std,accuracy_mean,accuracy_std,auc_mean,auc_std,"
        "precision_mean,precision_std,recall_mean,recall_std\n";
    auto num = [](double v) { return io::format_double(v); };
    for (const auto& c : rep.cells) {
        out += std::string(eval::to_string(c.variant)) + "," + std::string(eval::to_string(c.decision)) + ",";
        if (c.failed) {
            out += "failed,0,,,,,,,,,,\n";
            continue;
        }
        out += "ok," + std::to_string(c.folds.size()) + "," + num(c.mean.f1) + "," + num(c.stddev.f1) + "," +
               num(c.mean.accuracy) + "," + num(c.stddev.accuracy) + "," +
               (c.mean.auc ? num(*c.mean.auc) : "") + "," + (c.stddev.auc ? num(*c.stddev.auc) : "") + "," +
               num(c.mean.precision) + "," + num(c.stddev.precision) + "," + num(c.mean.recall) + "," +
               num(c.stddev.recall) + "\n";
    }
    return out;
}

inline Json to_json(const eval::Metrics& m) {
    Json j{{"f1", m.f1}, {"accuracy", m.accuracy}, {"precision", m.precision}, {"recall", m.recall}};
    j["auc"] = m.auc ? Json(*m.auc) : Json(nullptr);
    return j;
}

inline Json to_json(const eval::EvalReport& rep) {
    Json cells = Json::array();
    for (const auto& c : rep.cells) {
        Json cj{{"variant", std::string(eval::to_string(c.variant))},
                {"decision", std::string(eval::to_string(c.decision))},
                {"status", c.failed ? "failed" : "ok"}};
        if (c.failed) {
            cj["error"] = c.error;
        } else {
            cj["mean"] = to_json(c.mean);
            cj["std"] = to_json(c.stddev);
            Json folds = Json::array();
            for (const auto& f : c.folds) {
                Json fj = to_json(f.metrics);
                fj["fold"] = f.fold;
                fj["tp"] = f.metrics.tp;
                fj["fp"] = f.metrics.fp;
                fj["tn"] = f.metrics.tn;
                fj["fn"] = f.metrics.fn;
                fj["gamma"] = f.gamma ? Json(*f.gamma) : Json(nullptr);
                fj["gamma_fallback"] = f.gamma_fallback;
                fj["final_train_loss"] = f.final_train_loss;
                folds.push_back(fj);
            }
            cj["folds"] = folds;
        }
        cells.push_back(cj);
    }
    return Json{{"metadata", rep.metadata}, {"n_folds", rep.n_folds}, {"cells", cells}};
}

inline eval::AblationSpec ablation_spec_from_json(const Json& cfg, std::uint64_t seed) {
    const std::string w = "evaluate";
    eval::AblationSpec spec;
    if (cfg.contains("variants")) {
        spec.variants.clear();
        for (const auto& v : get_or<std::vector<std::string>>(cfg, "variants", {}, w))
            spec.variants.push_back(eval::variant_from_string(v));
    }
    if (cfg.contains("decisions")) {
        spec.decisions.clear();
        for (const auto& d : get_or<std::vector<std::string>>(cfg, "decisions", {}, w))
            spec.decisions.push_back(eval::decision_from_string(d));
    }
    spec.train.epochs = get_or<int>(cfg, "epochs", spec.train.epochs, w);
    spec.train.batch_size = get_or<int>(cfg, "batch_size", spec.train.batch_size, w);
    spec.train.learning_rate = get_or<double>(cfg, "learning_rate", spec.train.learning_rate, w);
    spec.train.optimizer = nn::optimizer_from_string(get_or<std::string>(cfg, "optimizer", "adam", w));
    nn::validate(spec.train);
    spec.hidden = get_or<std::vector<Eigen::Index>>(cfg, "hidden", spec.hidden, w);
    spec.per_node_b = get_or<bool>(cfg, "per_node_b", false, w);
    const auto standardization = get_or<std::string>(cfg, "standardization", "global", w);
    if (standardization != "global" && standardization != "binwise")
        throw ConfigError("evaluate: standardization must be 'global' or 'binwise'");
    spec.binwise_standardization = standardization == "binwise";
    spec.epsilon = get_or<double>(cfg, "epsilon", spec.epsilon, w);
    if (!(spec.epsilon >= 0.0 && spec.epsilon < 1.0)) throw ConfigError("evaluate: epsilon must be in [0, 1)");
    spec.C = get_or<double>(cfg, "C", spec.C, w);
    spec.gamma_grid = gamma_grid_from(cfg, w);
    spec.jobs = get_or<int>(cfg, "jobs", 1, w);
    if (spec.jobs < 1) throw ConfigError("evaluate: jobs must be >= 1");
    spec.seed = seed;
    return spec;
}

struct EvaluateResult {
    fs::path json;
    fs::path csv;
    eval::EvalReport report;
};

inline EvaluateResult cmd_evaluate(const Json& cfg, std::optional<std::uint64_t> seed_flag) {
    const std::string w = "evaluate";
    check_keys(cfg,
               {"data", "output", "variants", "decisions", "epochs", "batch_size", "learning_rate", "optimizer",
                "hidden", "per_node_b", "standardization", "epsilon", "C", "gamma", "gamma_grid", "n_folds", "jobs",
                "seed"},
               w);
    const auto seed = resolve_seed(seed_flag, cfg);
    const auto spec = ablation_spec_from_json(cfg, seed);
    const auto n_folds = get_or<size_t>(cfg, "n_folds", 5, w);
    const auto all = io::load_signals(require<std::string>(cfg, "data", w));
    const auto plan = eval::make_fold_plan(all, n_folds);

    EvaluateResult r;
    r.report = eval::run_ablation(all, plan, spec);
    r.report.metadata["seed"] = std::to_string(seed);
    const fs::path out = require<std::string>(cfg, "output", w);
    r.json = fs::path(out).replace_extension(".json");
    r.csv = fs::path(out).replace_extension(".csv");
    io::write_file(r.json, io::dump(to_json(r.report)));
    io::write_file(r.csv, format_report_csv(r.report));
    const bool all_failed = std::all_of(r.report.cells.begin(), r.report.cells.end(), [](const auto& c) { return c.failed; });
    if (all_failed) throw NumericalError("evaluate: every cell failed; first error: " + r.report.cells.front().error);
    return r;
}

// ---------------------------------------------------------------------------
// stats

/// Reference values of the uniform amplitude law that a matched EAD layer
/// produces.
inline constexpr double kUniformSkewness = 0.0;
inline constexpr double kUniformExcessKurtosis = -1.2;

inline std::string format_stats_csv(const nn::Autoencoder<Complex>& ae, const std::vector<nn::AmplitudeStats>& stats) {
    std::string out = "layer,activation,mean,variance,skewness,excess_kurtosis,reference_skewness,reference_excess_kurtosis\n";
    for (size_t i = 0; i < stats.size(); ++i) {
        const auto& s = stats[i];
        out += std::to_string(i) + "," + std::string(nn::to_string(ae.layers[i].activation)) + "," +
               io::format_double(s.mean) + "," + io::format_double(s.variance) + "," + io::format_double(s.skewness) +
               "," + io::format_double(s.excess_kurtosis()) + "," + io::format_double(kUniformSkewness) + "," +
               io::format_double(kUniformExcessKurtosis) + "\n";
    }
    return out;
}

/// Accepts an autoencoder model file or a focus model file.
inline std::string cmd_stats(const fs::path& model_path, const fs::path& data_path) {
    const Json model = io::load_json(model_path);
    const auto kind = model.value("kind", "");
    if (kind != "autoencoder_model" && kind != "focus_model") throw DataError("stats: unrecognised model file");
    if (io::model_field(model.at("autoencoder")) != "complex")
        throw DataError("stats: amplitude statistics need a complex-valued model");
    const auto rep = io::representation_tag(model);
    const auto st = io::standardizer_from_json(model.at("standardizer"));
    const auto ae = io::autoencoder_from_json<Complex>(model.at("autoencoder"));
    const auto xs = model_inputs<Complex>(io::load_dataset(data_path), st, rep, ae.input_dim);
    return format_stats_csv(ae, nn::layer_amplitude_stats(ae, xs));
}

}  // namespace fsvdd::app
