#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "commands.hpp"
#include "nnma/analysis.hpp"
#include "nnma/checkpoint.hpp"
#include "test_util.hpp"

namespace nnma::cli {
namespace {

namespace fs = std::filesystem;
using test::TempDir;

struct Run {
  int code;
  std::string out, err;
};

Run run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

std::string small_config(const fs::path& data, const fs::path& out, std::size_t levels = 2,
                         std::size_t epochs = 30, const std::string& task = "four") {
  return "# small synthetic run\n"
         "data_dir = " + data.string() + "\n"
         "output_dir = " + out.string() + "\n"
         "task = " + task + "\n"
         "hidden_dim = 8\nmemory_dim = 12\nembedding_dim = 10\n"
         "levels = " + std::to_string(levels) + "\n"
         "max_epochs = " + std::to_string(epochs) + "\npatience = 30\nseed = 3\n";
}

TEST(Config, ParsesKeysAndResolvesPaths) {
  std::istringstream in(
      "# comment\n\n data_dir = data \nembeddings_path=vec.txt\ntask = binary:Temporal\n"
      "momentum=0.5\nlearning_rate = 0.02\nembedding_learning_rate=0.001\ndropout=0.2\n"
      "d=7\nd_m=9\nD_e=11\nK=3\nmax_epochs=4\npatience=2\nseed=99\n");
  auto cfg = read_run_config(in, "/base");
  EXPECT_EQ(cfg.data_dir, fs::path("/base/data"));
  EXPECT_EQ(*cfg.embeddings_path, fs::path("/base/vec.txt"));
  EXPECT_EQ(cfg.task, TaskSpec::binary("Temporal"));
  EXPECT_EQ(cfg.hp.momentum, 0.5);
  EXPECT_EQ(cfg.hp.learning_rate, 0.02);
  EXPECT_EQ(cfg.hp.embedding_learning_rate, 0.001);
  EXPECT_EQ(cfg.hp.dropout, 0.2);
  EXPECT_EQ(cfg.hp.hidden_dim, 7u);
  EXPECT_EQ(cfg.hp.memory_dim, 9u);
  EXPECT_EQ(cfg.hp.embedding_dim, 11u);
  EXPECT_EQ(cfg.hp.levels, 3u);
  EXPECT_EQ(cfg.hp.max_epochs, 4u);
  EXPECT_EQ(cfg.hp.patience, 2u);
  EXPECT_EQ(cfg.hp.seed, 99u);
}

TEST(Config, Errors) {
  std::istringstream unknown("colour = red\n");
  EXPECT_THROW(read_run_config(unknown), UsageError);
  std::istringstream no_eq("data_dir\n");
  EXPECT_THROW(read_run_config(no_eq), UsageError);
  std::istringstream bad_num("dropout = lots\n");
  EXPECT_THROW(read_run_config(bad_num), UsageError);
}

TEST(Train, MissingDataDirExitsTwo) {
  TempDir dir("cli_missing");
  write_file(dir / "run.cfg", "data_dir = /nonexistent/nnma-data\n");
  auto r = run_cli({"train", "--config", (dir / "run.cfg").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("/nonexistent/nnma-data"), std::string::npos) << r.err;
}

TEST(Train, InvalidHyperparameterExitsTwo) {
  TempDir dir("cli_badhp");
  ASSERT_EQ(run_cli({"synth", "--seed", "1", "--n", "40", "--out", (dir / "data").string()}).code, 0);
  write_file(dir / "run.cfg", "data_dir = data\ndropout = 1.5\n");
  EXPECT_EQ(run_cli({"train", "--config", (dir / "run.cfg").string()}).code, 2);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run_cli({}).code, 2);
  EXPECT_EQ(run_cli({"frobnicate"}).code, 2);
  EXPECT_EQ(run_cli({"synth", "--n", "10"}).code, 2);
  EXPECT_EQ(run_cli({"--help"}).code, 0);
  EXPECT_EQ(run_cli({"gradcheck", "--dims", "d=0"}).code, 2);
}

TEST(Synth, SplitsAndDeterminism) {
  TempDir dir("cli_synth");
  auto r = run_cli({"synth", "--seed", "5", "--n", "400", "--out", (dir / "a").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  run_cli({"synth", "--seed", "5", "--n", "400", "--out", (dir / "b").string()});
  const std::vector<std::pair<std::string, std::size_t>> expected{
      {"train", 320}, {"dev", 40}, {"test", 40}};
  for (const auto& [name, n] : expected) {
    const auto file = name + ".tsv";
    auto ds = load_tsv(dir / "a" / file);
    EXPECT_EQ(ds.size(), n);
    EXPECT_EQ(slurp(dir / "a" / file), slurp(dir / "b" / file));
  }
  EXPECT_EQ(load_tsv(dir / "a" / "train.tsv").labels().size(), 4u);
}

TEST(Gradcheck, DefaultPassesAndListsGroups) {
  auto r = run_cli({"gradcheck"});
  EXPECT_EQ(r.code, 0) << r.out;
  for (const char* g : {"embeddings", "enc1", "enc2", "level1", "level2", "level3", "classifier"})
    EXPECT_NE(r.out.find(std::string("\n") + g + " "), std::string::npos) << g;
  EXPECT_NE(r.out.find("PASS"), std::string::npos);
}

TEST(Gradcheck, InjectedFaultFails) {
  auto r = run_cli({"gradcheck", "--inject-fault"});
  EXPECT_EQ(r.code, 1) << r.out;
  EXPECT_NE(r.out.find("FAIL"), std::string::npos);
  EXPECT_FALSE(debug::sigmoid_gradient_fault());
}

// One trained two-level and one single-level model shared by the tests below.
class TrainedCli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir("cli_trained");
    auto r = run_cli({"synth", "--seed", "2", "--n", "120", "--out", data().string()});
    ASSERT_EQ(r.code, 0) << r.err;
    write_file(*dir_ / "k2.cfg", small_config(data(), *dir_ / "k2"));
    write_file(*dir_ / "k1.cfg", small_config(data(), *dir_ / "k1", 1, 2));
    ASSERT_EQ(run_cli({"train", "--config", (*dir_ / "k2.cfg").string()}).code, 0);
    ASSERT_EQ(run_cli({"train", "--config", (*dir_ / "k1.cfg").string()}).code, 0);
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }
  static fs::path data() { return *dir_ / "data"; }
  static fs::path k2() { return *dir_ / "k2" / "model.ckpt"; }
  static fs::path k1() { return *dir_ / "k1" / "model.ckpt"; }
  static TempDir* dir_;
};

TempDir* TrainedCli::dir_ = nullptr;

TEST_F(TrainedCli, WritesArtifacts) {
  for (const char* f : {"model.ckpt", "train.log", "report.json"})
    EXPECT_TRUE(fs::exists(*dir_ / "k2" / f)) << f;
  const std::string report = slurp(*dir_ / "k2" / "report.json");
  EXPECT_NE(report.find("\"best_dev_macro_f1\""), std::string::npos);
  EXPECT_NE(report.find("\"test\""), std::string::npos);
}

TEST_F(TrainedCli, EvalOnTrainingSet) {
  auto r = run_cli({"eval", "--model", k2().string(), "--data", (data() / "train.tsv").string(),
                    "--task", "four", "--out", (*dir_ / "train_eval.json").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("accuracy "), std::string::npos);
  auto ckpt = load_checkpoint(k2());
  const double acc = evaluate(ckpt.model, load_tsv(data() / "train.tsv")).metrics.accuracy;
  EXPECT_GE(acc, 0.99);
  EXPECT_TRUE(fs::exists(*dir_ / "train_eval.json"));
}

TEST_F(TrainedCli, EvalEmptyFileFails) {
  write_file(*dir_ / "empty.tsv", "");
  auto r = run_cli({"eval", "--model", k2().string(), "--data", (*dir_ / "empty.tsv").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("no instances"), std::string::npos) << r.err;
}

TEST_F(TrainedCli, EvalTaskMismatchFails) {
  auto r = run_cli({"eval", "--model", k2().string(), "--data", (data() / "dev.tsv").string(),
                    "--task", "binary:Temporal"});
  EXPECT_EQ(r.code, 2);
}

TEST_F(TrainedCli, BinaryReportHasTwoClasses) {
  write_file(*dir_ / "bin.cfg", small_config(data(), *dir_ / "bin", 2, 1, "binary:Temporal"));
  ASSERT_EQ(run_cli({"train", "--config", (*dir_ / "bin.cfg").string()}).code, 0);
  std::ostringstream out;
  auto res = cmd_eval(*dir_ / "bin" / "model.ckpt", data() / "test.tsv",
                      TaskSpec::binary("Temporal"), *dir_ / "bin_eval.json", out);
  EXPECT_EQ(res.metrics.per_class_f1.size(), 2u);
  EXPECT_EQ(res.labels, (std::vector<std::string>{"Temporal", "Other"}));
  std::size_t lines = 0;
  std::istringstream in(out.str());
  for (std::string l; std::getline(in, l);) lines += l.rfind("f1 ", 0) == 0;
  EXPECT_EQ(lines, 2u);
}

TEST_F(TrainedCli, AnalyzeWritesHeatmaps) {
  const fs::path out = *dir_ / "analysis";
  auto r = run_cli({"analyze", "--model", k2().string(), "--data",
                    (data() / "dev.tsv").string(), "--ids", "0,3,7", "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  std::size_t ppm = 0, csv = 0;
  for (const auto& e : fs::directory_iterator(out)) {
    ppm += e.path().extension() == ".ppm";
    csv += e.path().extension() == ".csv";
  }
  EXPECT_EQ(ppm, 3u);
  EXPECT_EQ(csv, 3u);
  EXPECT_NE(slurp(out / "kl_report.txt").find("arg1 kl_12"), std::string::npos);

  // CSV weights against a fresh forward pass.
  auto ckpt = load_checkpoint(k2());
  auto dev = load_tsv(data() / "dev.tsv");
  auto pred = forward(ckpt.model, dev.instances[3]);
  std::istringstream in(slurp(out / "heatmap_3.csv"));
  std::string line;
  for (std::size_t row = 0; std::getline(in, line); ++row) {
    const auto& a = row % 2 == 0 ? pred.trace.levels[row / 2].a1 : pred.trace.levels[row / 2].a2;
    std::stringstream ss(line);
    std::string field;
    std::getline(ss, field, ',');
    std::getline(ss, field, ',');
    for (std::size_t i = 0; std::getline(ss, field, ','); ++i)
      EXPECT_NEAR(std::stod(field.substr(field.rfind(':') + 1)), a[i], 1e-10);
  }
}

TEST_F(TrainedCli, AnalyzeBadIdFails) {
  auto r = run_cli({"analyze", "--model", k2().string(), "--data",
                    (data() / "dev.tsv").string(), "--ids", "999", "--out",
                    (*dir_ / "bad").string()});
  EXPECT_EQ(r.code, 2);
}

TEST_F(TrainedCli, SingleLevelAnalyzeGivesNotice) {
  std::ostringstream out;
  AnalyzeOptions opts;
  opts.out_dir = *dir_ / "k1_analysis";
  auto res = cmd_analyze(k1(), data() / "dev.tsv", opts, out);
  EXPECT_FALSE(res.kl_computed);
  EXPECT_NE(slurp(opts.out_dir / "kl_report.txt").find("single attention level"),
            std::string::npos);
}

TEST_F(TrainedCli, TrainTwiceIsByteIdentical) {
  write_file(*dir_ / "again.cfg", small_config(data(), *dir_ / "again"));
  ASSERT_EQ(run_cli({"train", "--config", (*dir_ / "again.cfg").string()}).code, 0);
  for (const char* f : {"model.ckpt", "train.log", "report.json"})
    EXPECT_EQ(slurp(*dir_ / "k2" / f), slurp(*dir_ / "again" / f)) << f;
}

TEST_F(TrainedCli, FlagOverrides) {
  auto r = run_cli({"train", "--config", (*dir_ / "k2.cfg").string(), "--levels", "3",
                    "--seed", "11", "--max-epochs", "1", "--output", (*dir_ / "ovr").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  auto ckpt = load_checkpoint(*dir_ / "ovr" / "model.ckpt");
  EXPECT_EQ(ckpt.model.dims.levels, 3u);
  EXPECT_NE(slurp(*dir_ / "ovr" / "report.json").find("\"seed\": 11"), std::string::npos);
}

}  // namespace
}  // namespace nnma::cli
