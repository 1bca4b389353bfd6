#include "mfcf/cli.hpp"
#include "mfcf/error.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace mfcf;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "mfcf");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// MovieLens-style CSV with string ids, 40 users x 30 items.
std::string synthetic_csv(std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::uniform_int_distribution<int> score(1, 5);
    std::bernoulli_distribution take(0.4);
    std::ostringstream out;
    out << "userId,movieId,rating,timestamp\n";
    for (int u = 0; u < 40; ++u) {
        for (int i = 0; i < 30; ++i) {
            if (take(gen)) {
                out << "u" << u << ",m" << i << ',' << score(gen) << ",964982703\n";
            }
        }
    }
    return out.str();
}

std::string small_config(const std::string& data_path, const std::string& out_dir) {
    return R"({
  "schema_version": 1,
  "datasets": [{"name": "synthetic", "path": ")" + data_path + R"(", "format": {"has_header": true}}],
  "plan": {
    "models": ["PMF", "BiasedMF", "NMF", "BeMF", "BNMF", "URP"],
    "grid": {"factors": [2, 3], "iterations": [4], "learning_rate": [0.01],
             "regularization": [0.05], "bnmf_alpha": [0.4], "bnmf_beta": [5]},
    "folds": 3,
    "seed": 5,
    "max_n": 10
  },
  "output": {"directory": ")" + out_dir + R"("}
})";
}

} // namespace

TEST(Cli, UsageErrors) {
    EXPECT_EQ(run_cli({}).code, cli::kUsageError);
    EXPECT_EQ(run_cli({"frobnicate"}).code, cli::kUsageError);
    EXPECT_EQ(run_cli({"train", "--dataset", "movielens"}).code, cli::kUsageError);  // no --out
    EXPECT_EQ(run_cli({"--help"}).code, cli::kOk);
}

TEST(Cli, StatsOnAFile) {
    const testing_support::TempDir dir;
    const auto path = dir.write("tiny.csv", "user,item,rating\na,x,5\na,y,3\nb,x,4\n");
    const auto r = run_cli({"stats", "--dataset", path});
    ASSERT_EQ(r.code, cli::kOk) << r.err;
    EXPECT_NE(r.out.find("tiny"), std::string::npos);
    EXPECT_NE(r.out.find("25.00"), std::string::npos) << r.out;  // 1 - 3/4
}

TEST(Cli, MissingOrMalformedInputIsAnIoError) {
    const testing_support::TempDir dir;
    EXPECT_EQ(run_cli({"stats", "--dataset", dir.file("absent.csv")}).code, cli::kIoError);
    const auto bad = dir.write("bad.csv", "user,item,rating\na,x,seven\n");
    const auto r = run_cli({"stats", "--dataset", bad});
    EXPECT_EQ(r.code, cli::kIoError);
    EXPECT_NE(r.err.find("bad.csv:2"), std::string::npos) << r.err;
}

TEST(Cli, UnknownModelIsAUsageError) {
    const testing_support::TempDir dir;
    const auto data = dir.write("r.csv", synthetic_csv(1));
    const auto r = run_cli({"evaluate", "--dataset", data, "--model", "SVD++"});
    EXPECT_EQ(r.code, cli::kUsageError);
    EXPECT_NE(r.err.find("SVD++"), std::string::npos) << r.err;
}

TEST(Cli, DivergenceExitCode) {
    const testing_support::TempDir dir;
    const auto data = dir.write("r.csv", synthetic_csv(2));
    const auto r = run_cli({"train", "--dataset", data, "--model", "PMF", "--lr", "5", "--iterations",
                            "50", "--out", dir.file("m.txt")});
    EXPECT_EQ(r.code, cli::kDiverged);
    EXPECT_NE(r.err.find("learning_rate=5"), std::string::npos) << r.err;
}

TEST(Cli, TrainedModelReloadsWithIdenticalPredictions) {
    const testing_support::TempDir dir;
    const auto data = dir.write("r.csv", synthetic_csv(3));
    for (const char* model : {"BiasedMF", "BNMF", "URP"}) {
        const auto file = dir.file(std::string(model) + ".txt");
        const auto r = run_cli({"train", "--dataset", data, "--model", model, "-k", "3",
                                "--iterations", "6", "--seed", "9", "--out", file});
        ASSERT_EQ(r.code, cli::kOk) << r.err;
        const auto loaded = load_model_file(file);

        const auto spec = cli::resolve_dataset(data, "movielens");
        const auto ds = load_ratings(spec.path, spec.format);
        ModelConfig c;
        c.kind = parse_model_kind(model);
        c.factors = 3;
        c.iterations = 6;
        c.seed = 9;
        const auto direct = fit(c, ds);

        std::mt19937_64 gen(1);
        std::uniform_int_distribution<Index> user(0, static_cast<Index>(ds.num_users() - 1));
        std::uniform_int_distribution<Index> item(0, static_cast<Index>(ds.num_items() - 1));
        for (int k = 0; k < 100; ++k) {
            const Index u = user(gen), i = item(gen);
            EXPECT_EQ(loaded->predict(u, i), direct->predict(u, i));
        }
    }
}

TEST(Cli, EvaluatePrintsATable) {
    const testing_support::TempDir dir;
    const auto data = dir.write("r.csv", synthetic_csv(4));
    const auto r = run_cli({"evaluate", "--dataset", data, "--model", "NMF", "-k", "2",
                            "--iterations", "5", "--folds", "3", "--max-n", "4"});
    ASSERT_EQ(r.code, cli::kOk) << r.err;
    EXPECT_NE(r.out.find("MAE"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("ndcg"), std::string::npos) << r.out;
}

TEST(RunConfigParsing, Defaults) {
    const auto c = cli::parse_run_config(R"({"schema_version": 1})");
    EXPECT_EQ(c.models.size(), 6u);
    EXPECT_EQ(c.folds, 4u);
    EXPECT_EQ(c.seed, 42u);
    EXPECT_EQ(c.max_n, 10u);
    EXPECT_TRUE(c.write_csv);
    EXPECT_TRUE(c.write_json);
}

TEST(RunConfigParsing, FullDocument) {
    const auto c = cli::parse_run_config(R"({
      "schema_version": 1,
      "datasets": [{"preset": "filmtrust", "path": "/data/ft.txt"}, {"preset": "movielens100k", "threshold": 5}],
      "plan": {"models": ["bnmf", "PMF"], "grid": {"factors": [4]},
               "model_grids": {"BNMF": {"bnmf_beta": [25]}},
               "folds": 5, "seed": 3, "max_n": 7,
               "sampling": {"mode": "random", "count": 2, "seed": 8}},
      "model": {"model": "BeMF", "factors": 6},
      "output": {"directory": "out", "formats": ["json"]}
    })");
    ASSERT_EQ(c.datasets.size(), 2u);
    EXPECT_EQ(c.datasets[0].name, "filmtrust");
    EXPECT_EQ(c.datasets[0].path, "/data/ft.txt");
    EXPECT_EQ(c.datasets[0].format.scale.step, 0.5);
    EXPECT_EQ(c.datasets[1].format.scale.threshold, 5.0);
    EXPECT_EQ(c.models, (std::vector<ModelKind>{ModelKind::BNMF, ModelKind::PMF}));
    const auto bnmf = c.plan_for(ModelKind::BNMF);
    EXPECT_EQ(bnmf.grid.factors, (std::vector<std::size_t>{4}));
    EXPECT_EQ(bnmf.grid.bnmf_beta, (std::vector<double>{25}));
    EXPECT_EQ(c.plan_for(ModelKind::PMF).grid.bnmf_beta, (std::vector<double>{5, 15, 25}));
    EXPECT_EQ(bnmf.folds, 5u);
    EXPECT_EQ(bnmf.master_seed, 3u);
    EXPECT_EQ(bnmf.max_n, 7u);
    EXPECT_TRUE(bnmf.sampling.random);
    EXPECT_EQ(bnmf.sampling.count, 2u);
    EXPECT_EQ(c.model.kind, ModelKind::BeMF);
    EXPECT_EQ(c.model.factors, 6u);
    EXPECT_EQ(c.output_directory, "out");
    EXPECT_FALSE(c.write_csv);
    EXPECT_TRUE(c.write_json);
}

TEST(RunConfigParsing, Errors) {
    for (const char* doc : {
             R"({})",
             R"({"schema_version": 2})",
             R"({"schema_version": 1, "extra": true})",
             R"({"schema_version": 1, "plan": {"folds": "four"}})",
             R"({"schema_version": 1, "plan": {"grid": {"factor": [4]}}})",
             R"({"schema_version": 1, "plan": {"models": ["SVD"]}})",
             R"({"schema_version": 1, "plan": {"sampling": {"mode": "some"}}})",
             R"({"schema_version": 1, "datasets": [{"preset": "netflix"}]})",
             R"({"schema_version": 1, "datasets": [{"name": "x"}]})",
             R"({"schema_version": 1, "output": {"formats": ["xml"]}})",
             R"({"schema_version": 1,)",
         }) {
        EXPECT_THROW(cli::parse_run_config(doc), ConfigError) << doc;
    }
    EXPECT_THROW(cli::load_run_config("/nonexistent/config.json"), IoError);
}

TEST(Cli, BenchmarkIsDeterministicAndExportable) {
    const testing_support::TempDir dir;
    const auto data = dir.write("r.csv", synthetic_csv(5));
    const auto config = dir.write("run.json", small_config(data, dir.file("unused")));
    const auto a = dir.file("a");
    const auto b = dir.file("b");
    const auto ra = run_cli({"benchmark", "--config", config, "--out", a, "--quiet"});
    ASSERT_EQ(ra.code, cli::kOk) << ra.err;
    const auto rb =
        run_cli({"benchmark", "--config", config, "--out", b, "--quiet", "--jobs", "3"});
    ASSERT_EQ(rb.code, cli::kOk) << rb.err;

    std::size_t compared = 0;
    for (const auto& entry : fs::recursive_directory_iterator(a)) {
        const auto rel = fs::relative(entry.path(), a);
        const auto ext = entry.path().extension();
        if (!entry.is_regular_file() || (ext != ".csv" && ext != ".json" && ext != ".md")) continue;
        EXPECT_EQ(read_file(entry.path()), read_file(fs::path(b) / rel)) << rel;
        ++compared;
    }
    // trials, 2 mae tables x 2 formats, results.json, 5 metrics x 2 views
    EXPECT_EQ(compared, 1u + 4u + 1u + 10u);
    EXPECT_NE(ra.out.find("best-config MAE"), std::string::npos);

    const auto exported = run_cli({"export-plot-data", "--out", a});
    ASSERT_EQ(exported.code, cli::kOk) << exported.err;
    std::istringstream lines(exported.out);
    std::string header, line;
    std::getline(lines, header);
    EXPECT_EQ(header, "dataset,model,metric,N,value");
    std::size_t rows = 0;
    while (std::getline(lines, line)) ++rows;
    EXPECT_EQ(rows, 6u * 5u * 10u);
    EXPECT_EQ(run_cli({"export-plot-data", "--out", a, "--view", "best"}).code, cli::kOk);
    EXPECT_EQ(run_cli({"export-plot-data", "--out", a, "--view", "median"}).code, cli::kUsageError);
}

TEST(Cli, BenchmarkResumesFromProgressLog) {
    const testing_support::TempDir dir;
    const auto data = dir.write("r.csv", synthetic_csv(6));
    const auto config = dir.write("run.json", small_config(data, dir.file("out")));
    ASSERT_EQ(run_cli({"benchmark", "--config", config, "--quiet", "--model", "PMF"}).code, cli::kOk);
    const auto first = read_file(dir.file("out/results.json"));
    const auto progress = read_file(dir.file("out/progress.jsonl"));
    ASSERT_EQ(run_cli({"benchmark", "--config", config, "--quiet", "--model", "PMF"}).code, cli::kOk);
    EXPECT_EQ(read_file(dir.file("out/results.json")), first);
    EXPECT_EQ(read_file(dir.file("out/progress.jsonl")), progress);
}

TEST(Cli, ExportWithoutResultsFails) {
    const testing_support::TempDir dir;
    EXPECT_EQ(run_cli({"export-plot-data", "--out", dir.file("nothing")}).code, cli::kIoError);
}
