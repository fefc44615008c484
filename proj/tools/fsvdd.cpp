// Command-line front end: generate, train, fit, score, evaluate, stats.

#include "fsvdd/app/commands.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

namespace {

using fsvdd::app::Json;

// Flags override the matching config keys.
void set_if(Json& cfg, const char* key, const std::optional<std::string>& v) {
    if (v) cfg[key] = *v;
}
template <class T>
void set_if(Json& cfg, const char* key, const std::optional<T>& v) {
    if (v) cfg[key] = *v;
}

void write_or_print(const std::optional<std::string>& path, const std::string& text) {
    if (path) {
        fsvdd::io::write_file(*path, text);
    } else {
        std::cout << text;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"focus-SVDD anomaly detection for FMCW radar IF signals"};
    app.require_subcommand(1);
    app.fallthrough();
    std::optional<std::uint64_t> seed;
    app.add_option("--seed", seed, "Seed for every random stream (overrides config and FSVDD_SEED)");

    std::optional<std::string> config, output, data, model, decision_flag;
    std::optional<int> jobs, epochs;

    auto* gen = app.add_subcommand("generate", "Write a synthetic dataset, its metadata and a manifest");
    gen->add_option("config", config, "JSON config")->check(CLI::ExistingFile);
    gen->add_option("-o,--output", output, "Samples CSV path");

    auto* train = app.add_subcommand("train", "Train an autoencoder on the training split");
    train->add_option("config", config, "JSON config")->check(CLI::ExistingFile);
    train->add_option("-d,--data", data, "Dataset CSV");
    train->add_option("-o,--output", output, "Model JSON path");
    train->add_option("--epochs", epochs, "Training epochs");

    auto* fit = app.add_subcommand("fit", "Select gamma and fit the residual boundary");
    fit->add_option("config", config, "JSON config")->check(CLI::ExistingFile);
    fit->add_option("-m,--model", model, "Autoencoder model JSON");
    fit->add_option("-d,--data", data, "Dataset CSV");
    fit->add_option("-o,--output", output, "Focus model JSON path");

    std::string score_model, score_data, score_decision = "focus_m";
    auto* score = app.add_subcommand("score", "Per-sample scores and decisions");
    score->add_option("model", score_model, "Focus model JSON")->required()->check(CLI::ExistingFile);
    score->add_option("data", score_data, "Dataset CSV")->required()->check(CLI::ExistingFile);
    score->add_option("--decision", score_decision, "norm | svdd | focus_r | focus_m");
    score->add_option("-o,--output", output, "Output CSV (default: stdout)");

    auto* evaluate = app.add_subcommand("evaluate", "k-fold ablation over representations and decisions");
    evaluate->add_option("config", config, "JSON config")->check(CLI::ExistingFile);
    evaluate->add_option("-d,--data", data, "Dataset CSV");
    evaluate->add_option("-o,--output", output, "Report path (.json and .csv are written)");
    evaluate->add_option("-j,--jobs", jobs, "Worker threads");
    evaluate->add_option("--epochs", epochs, "Training epochs");

    std::string stats_model, stats_data;
    auto* stats = app.add_subcommand("stats", "Per-layer amplitude skewness and excess kurtosis");
    stats->add_option("model", stats_model, "Complex autoencoder or focus model JSON")->required()->check(CLI::ExistingFile);
    stats->add_option("data", stats_data, "Dataset CSV")->required()->check(CLI::ExistingFile);
    stats->add_option("-o,--output", output, "Output CSV (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed()) {
            Json cfg = fsvdd::app::load_config(config);
            set_if(cfg, "output", output);
            const auto r = fsvdd::app::cmd_generate(cfg, seed);
            std::printf("wrote %zu signals to %s\n", r.n_signals, r.samples.string().c_str());
            std::printf("sha256 %s\n", r.content_hash.c_str());
        } else if (train->parsed()) {
            Json cfg = fsvdd::app::load_config(config);
            set_if(cfg, "data", data);
            set_if(cfg, "output", output);
            set_if(cfg, "epochs", epochs);
            const auto r = fsvdd::app::cmd_train(cfg, seed);
            std::printf("initial loss %s\nfinal loss %s\nwrote %s\n", fsvdd::io::format_double(r.report.initial_loss).c_str(),
                        fsvdd::io::format_double(r.report.final_loss).c_str(), r.output.string().c_str());
        } else if (fit->parsed()) {
            Json cfg = fsvdd::app::load_config(config);
            set_if(cfg, "model", model);
            set_if(cfg, "data", data);
            set_if(cfg, "output", output);
            const auto r = fsvdd::app::cmd_fit(cfg, seed);
            std::printf("gamma %s%s\nD %s\nD_m %s\nm_T %s\nm_V %s\nwrote %s\n", fsvdd::io::format_double(r.gamma).c_str(),
                        r.gamma_fallback ? " (no grid value met epsilon; smallest used)" : "",
                        fsvdd::io::format_double(r.density_limit).c_str(),
                        fsvdd::io::format_double(r.corrected_limit).c_str(), fsvdd::io::format_double(r.m_train).c_str(),
                        fsvdd::io::format_double(r.m_val).c_str(), r.output.string().c_str());
        } else if (score->parsed()) {
            write_or_print(output, fsvdd::app::cmd_score(score_model, score_data, score_decision));
        } else if (evaluate->parsed()) {
            Json cfg = fsvdd::app::load_config(config);
            set_if(cfg, "data", data);
            set_if(cfg, "output", output);
            set_if(cfg, "jobs", jobs);
            set_if(cfg, "epochs", epochs);
            const auto r = fsvdd::app::cmd_evaluate(cfg, seed);
            for (const auto& c : r.report.cells)
                if (c.failed) std::fprintf(stderr, "cell %s/%s failed: %s\n", std::string(fsvdd::eval::to_string(c.variant)).c_str(),
                                           std::string(fsvdd::eval::to_string(c.decision)).c_str(), c.error.c_str());
            std::printf("wrote %s and %s\n", r.json.string().c_str(), r.csv.string().c_str());
        } else if (stats->parsed()) {
            write_or_print(output, fsvdd::app::cmd_stats(stats_model, stats_data));
        }
    } catch (const fsvdd::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const fsvdd::DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 3;
    } catch (const fsvdd::NumericalError& e) {
        std::fprintf(stderr, "numerical error: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
