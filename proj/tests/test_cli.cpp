// Drives the fsvdd binary end to end.

#include "fsvdd/app/commands.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using namespace fsvdd;
using fsvdd::io::Json;

namespace {

struct Run {
    int code = -1;
    std::string out;
};

Run run(const std::string& args) {
    const std::string cmd = std::string(FSVDD_CLI_PATH) + " " + args + " 2>/dev/null";
    Run r;
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) return r;
    std::array<char, 4096> buf;
    size_t n = 0;
    while ((n = std::fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
    const int status = pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

void write_json(const fs::path& p, const Json& j) { io::write_file(p, j.dump(2)); }

std::vector<std::vector<std::string>> read_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string c;
        while (std::getline(ls, c, ',')) cells.push_back(c);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        rows.push_back(cells);
    }
    return rows;
}

class Cli : public ::testing::Test {
protected:
    static fs::path dir;
    static fs::path data;

    static void SetUpTestSuite() {
        dir = fs::temp_directory_path() / ("fsvdd_cli_test_" + std::to_string(::getpid()));
        fs::remove_all(dir);
        fs::create_directories(dir);
        data = dir / "data.csv";
        write_json(dir / "gen.json", small_generator(data));
        ASSERT_EQ(run("generate " + (dir / "gen.json").string() + " --seed 3").code, 0);
    }
    static void TearDownTestSuite() { fs::remove_all(dir); }

    static Json small_generator(const fs::path& out) {
        return Json{{"output", out.string()},
                    {"length", 64},
                    {"counts", {{"train", 30}, {"val", 12}, {"test_healthy", 12}, {"test_abnormal", 12}}},
                    {"n_folds", 3}};
    }

    static fs::path train(const std::string& name, const Json& extra = Json::object()) {
        Json cfg{{"data", data.string()}, {"output", (dir / name).string()}, {"hidden", {8, 4, 8}}, {"epochs", 5}};
        cfg.update(extra);
        write_json(dir / (name + ".cfg.json"), cfg);
        EXPECT_EQ(run("train " + (dir / (name + ".cfg.json")).string() + " --seed 1").code, 0);
        return dir / name;
    }

    static fs::path fit(const fs::path& model, const std::string& name, const Json& extra = Json::object()) {
        Json cfg{{"model", model.string()}, {"data", data.string()}, {"output", (dir / name).string()}};
        cfg.update(extra);
        write_json(dir / (name + ".cfg.json"), cfg);
        EXPECT_EQ(run("fit " + (dir / (name + ".cfg.json")).string()).code, 0);
        return dir / name;
    }
};

fs::path Cli::dir;
fs::path Cli::data;

}  // namespace

TEST_F(Cli, GenerateWritesFilesAndManifest) {
    EXPECT_TRUE(fs::exists(data));
    EXPECT_TRUE(fs::exists(dir / "data.meta.jsonl"));
    const auto manifest = io::load_json(dir / "data.manifest.json");
    EXPECT_EQ(manifest.at("n_signals").get<int>(), 66);
    EXPECT_EQ(manifest.at("content_hash").at("value").get<std::string>(),
              io::sha256_hex(io::read_file(data) + io::read_file(dir / "data.meta.jsonl")));
    EXPECT_EQ(io::load_signals(data).size(), 66u);
}

TEST_F(Cli, GenerateIsDeterministic) {
    write_json(dir / "g2.json", small_generator(dir / "again.csv"));
    ASSERT_EQ(run("generate " + (dir / "g2.json").string() + " --seed 3").code, 0);
    EXPECT_EQ(io::read_file(dir / "again.csv"), io::read_file(data));
    const auto m1 = io::load_json(dir / "again.manifest.json"), m2 = io::load_json(dir / "data.manifest.json");
    EXPECT_EQ(m1.at("content_hash"), m2.at("content_hash"));
    EXPECT_EQ(m1.at("config"), m2.at("config"));
    ASSERT_EQ(run("generate " + (dir / "g2.json").string() + " --seed 4").code, 0);
    EXPECT_NE(io::read_file(dir / "again.csv"), io::read_file(data));
}

TEST_F(Cli, GenerateMinimalCounts) {
    Json cfg = small_generator(dir / "tiny.csv");
    cfg["counts"] = {{"train", 1}, {"val", 1}, {"test_healthy", 1}, {"test_abnormal", 1}};
    write_json(dir / "tiny.json", cfg);
    ASSERT_EQ(run("generate " + (dir / "tiny.json").string()).code, 0);
    EXPECT_EQ(io::load_signals(dir / "tiny.csv").size(), 4u);
}

TEST_F(Cli, TrainIsDeterministicForRealAndAnalytic) {
    const auto a = train("real_a.json", {{"representation", "real"}});
    const auto b = train("real_b.json", {{"representation", "real"}});
    EXPECT_EQ(io::read_file(a), io::read_file(b));
    const auto c = train("ead.json", {{"representation", "analytic"}, {"activation", "ead"}});
    const auto doc = io::load_json(c);
    EXPECT_EQ(doc.at("kind"), "autoencoder_model");
    EXPECT_EQ(io::model_field(doc.at("autoencoder")), "complex");
    EXPECT_LT(doc.at("train_report").at("final_loss").get<double>(), doc.at("train_report").at("initial_loss").get<double>());
}

TEST_F(Cli, FitRecordsCorrectionIdentity) {
    const auto m = fit(train("fit_ae.json", {{"representation", "analytic"}, {"activation", "crelu"}}), "focus.json");
    const auto doc = io::load_json(m);
    const double D = doc.at("svdd").at("density_limit").get<double>();
    const double Dm = doc.at("svdd").at("corrected_limit").get<double>();
    EXPECT_NEAR(Dm - D, doc.at("m_val").get<double>() - doc.at("m_train").get<double>(), 1e-12);
    EXPECT_TRUE(doc.contains("raw_svdd"));
}

TEST_F(Cli, FitSingleGammaIsUsed) {
    const auto m = fit(train("g_ae.json"), "g_focus.json", {{"gamma_grid", {0.0625}}});
    EXPECT_EQ(io::load_json(m).at("svdd").at("gamma").get<double>(), 0.0625);
}

TEST_F(Cli, ScoreAgreesWithLibrary) {
    const auto model_path = fit(train("s_ae.json", {{"representation", "analytic"}}), "s_focus.json");
    const auto r = run("score " + model_path.string() + " " + data.string() + " --decision focus_m");
    ASSERT_EQ(r.code, 0);
    const auto rows = read_csv(r.out);
    const auto model = io::load_json(model_path);
    const auto sigs = io::load_signals(data);
    ASSERT_EQ(rows.size(), sigs.size() + 1);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"id", "score", "decision"}));

    focus::FocusModel<Complex> fm;
    fm.autoencoder = io::autoencoder_from_json<Complex>(model.at("autoencoder"));
    fm.svdd = io::svdd_from_json<Complex>(model.at("svdd"));
    const auto st = io::standardizer_from_json(model.at("standardizer"));
    for (size_t i = 0; i < sigs.size(); ++i) {
        const auto x = to_analytic_representation(sigs[i], st);
        EXPECT_EQ(rows[i + 1][0], sigs[i].meta.at("id"));
        EXPECT_EQ(std::stoi(rows[i + 1][2]), focus::decide_m(fm, x));
        EXPECT_NEAR(std::stod(rows[i + 1][1]), -focus::residual_density(fm, x), 1e-12);
    }
}

TEST_F(Cli, ScoreTrainingSetFocusRIsAllHealthy) {
    const auto model_path = fit(train("t_ae.json"), "t_focus.json", {{"validation", "train"}, {"selection", "focus_r"}});
    const auto doc = io::load_json(model_path);
    EXPECT_EQ(doc.at("svdd").at("corrected_limit"), doc.at("svdd").at("density_limit"));
    std::vector<IFSignal> train_only;
    for (const auto& s : io::load_signals(data))
        if (s.meta.at("split") == "train") train_only.push_back(s);
    const auto text = io::format_dataset(train_only);
    io::write_file(dir / "train_only.csv", text.samples);
    io::write_file(dir / "train_only.meta.jsonl", text.meta);
    const auto r = run("score " + model_path.string() + " " + (dir / "train_only.csv").string() + " --decision focus_r");
    ASSERT_EQ(r.code, 0);
    const auto rows = read_csv(r.out);
    ASSERT_EQ(rows.size(), 31u);
    for (size_t i = 1; i < rows.size(); ++i) EXPECT_EQ(rows[i][2], "0");
}

TEST_F(Cli, ScoreEmptyDatasetPrintsHeader) {
    const auto model_path = fit(train("e_ae.json"), "e_focus.json");
    io::write_file(dir / "empty.csv", "");
    const auto r = run("score " + model_path.string() + " " + (dir / "empty.csv").string());
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(r.out, "id,score,decision\n");
}

TEST_F(Cli, EvaluateSingleCell) {
    Json cfg{{"data", data.string()},    {"output", (dir / "report").string()}, {"variants", {"xH_ead"}},
             {"decisions", {"focus_m"}}, {"hidden", {8, 4, 8}},                 {"epochs", 3},
             {"n_folds", 3}};
    write_json(dir / "eval.json", cfg);
    ASSERT_EQ(run("evaluate " + (dir / "eval.json").string() + " --seed 2").code, 0);
    const auto csv = io::read_file(dir / "report.csv");
    const auto rows = read_csv(csv);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[1][0], "xH_ead");
    EXPECT_EQ(rows[1][1], "focus_m");
    EXPECT_EQ(rows[1][2], "ok");
    EXPECT_EQ(rows[1][3], "3");
    const auto report = io::load_json(dir / "report.json");
    EXPECT_EQ(report.at("cells").size(), 1u);
    EXPECT_EQ(report.at("cells")[0].at("folds").size(), 3u);

    ASSERT_EQ(run("evaluate " + (dir / "eval.json").string() + " --seed 2 -j 2").code, 0);
    EXPECT_EQ(io::read_file(dir / "report.csv"), csv);
}

TEST_F(Cli, StatsReportsEveryLayer) {
    const auto model = train("st_ae.json", {{"representation", "analytic"}, {"activation", "ead"}});
    const auto r = run("stats " + model.string() + " " + data.string());
    ASSERT_EQ(r.code, 0);
    const auto rows = read_csv(r.out);
    ASSERT_EQ(rows.size(), 5u);  // header + 4 layers
    EXPECT_EQ(rows[1][1], "ead");
    EXPECT_EQ(rows[4][1], "linear");
    for (size_t i = 1; i < rows.size(); ++i) {
        EXPECT_EQ(rows[i][6], "0");
        EXPECT_EQ(rows[i][7], "-1.2");
    }
    EXPECT_EQ(run("stats " + train("st_real.json").string() + " " + data.string()).code, 3);
}

TEST_F(Cli, ExitCodes) {
    write_json(dir / "unknown.json", Json{{"data", data.string()}, {"output", (dir / "x.json").string()}, {"bogus", 1}});
    EXPECT_EQ(run("train " + (dir / "unknown.json").string()).code, 2);
    write_json(dir / "badrep.json", Json{{"data", data.string()}, {"output", (dir / "x.json").string()}, {"representation", "polar"}});
    EXPECT_EQ(run("train " + (dir / "badrep.json").string()).code, 2);
    write_json(dir / "missing.json", Json{{"data", (dir / "nope.csv").string()}, {"output", (dir / "x.json").string()}});
    EXPECT_EQ(run("train " + (dir / "missing.json").string()).code, 3);
    EXPECT_EQ(run("frobnicate").code, 2);
    EXPECT_EQ(run("train " + (dir / "unknown.json").string() + " --epochs notanumber").code, 2);
    EXPECT_EQ(run("--help").code, 0);
}
