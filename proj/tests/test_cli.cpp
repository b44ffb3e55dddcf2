#include "emif/cli.hpp"
#include "emif/errors.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

namespace emif {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("emif_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::vector<std::string> small_model() const {
    return {"--epochs", "1", "--dim", "4", "--coattention-dim", "4", "--divergence-dim", "4", "--topk", "2"};
  }

  fs::path dir_;
};

TEST(ConfigText, ParsesKeyValueLines) {
  const auto cfg = cli::parse_config_text("# comment\nepochs = 3\n  lr=0.01  # trailing\n\n--seed = 4\n");
  EXPECT_EQ(cfg.at("epochs"), "3");
  EXPECT_EQ(cfg.at("lr"), "0.01");
  EXPECT_EQ(cfg.at("seed"), "4");
  EXPECT_THROW(cli::parse_config_text("no equals sign"), ValidationError);
}

TEST_F(CliTest, SynthIsDeterministic) {
  ASSERT_EQ(run({"synth", "--n", "32", "--seed", "7", "--out", path("a.jsonl")}).code, 0);
  ASSERT_EQ(run({"synth", "--n", "32", "--seed", "7", "--out", path("b.jsonl")}).code, 0);
  EXPECT_EQ(slurp(path("a.jsonl")), slurp(path("b.jsonl")));
  EXPECT_NE(slurp(path("a.jsonl.manifest")).find("seed = 7"), std::string::npos);
}

TEST_F(CliTest, IngestReportsCounts) {
  std::ofstream(path("d.jsonl")) << R"({"id":"a","text":"x y","label":1,"comments":["c"]})" "\n"
                                 << R"({"id":"b","text":"z","label":0})" "\n";
  const Result r = run({"ingest", path("d.jsonl")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("examples: 2 (true 1, fake 1)"), std::string::npos);
  EXPECT_NE(r.out.find("User Comments"), std::string::npos);
}

TEST_F(CliTest, IngestValidationFailureExitsOne) {
  std::ofstream(path("bad.jsonl")) << R"({"id":"a","text":"x"})" "\n";
  const Result r = run({"ingest", "--data", path("bad.jsonl")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("label"), std::string::npos);
  EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1);
}

TEST_F(CliTest, UsageErrorsExitTwo) {
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  EXPECT_EQ(run({"train", "--no-such-flag", "1"}).code, 2);
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"train", "--out", path("o")}).code, 2);
  EXPECT_EQ(run({"synth", "--n", "many", "--out", path("x")}).code, 2);
}

TEST_F(CliTest, HelpExitsZero) { EXPECT_EQ(run({"--help"}).code, 0); }

TEST_F(CliTest, FlagBeatsConfigBeatsDefault) {
  ASSERT_EQ(run({"synth", "--n", "24", "--out", path("d.jsonl")}).code, 0);
  std::ofstream(path("run.cfg")) << "epochs = 2\nbatch = 4\n";
  auto args = small_model();
  args.insert(args.begin(), {"train", "--data", path("d.jsonl"), "--out", path("o"), "--config", path("run.cfg")});
  const Result r = run(args);
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string manifest = slurp(path("o/manifest.txt"));
  EXPECT_NE(manifest.find("epochs = 1\n"), std::string::npos);    // flag
  EXPECT_NE(manifest.find("batch = 4\n"), std::string::npos);     // config file
  EXPECT_NE(manifest.find("patience = 10\n"), std::string::npos); // default
  EXPECT_NE(manifest.find("code_version = "), std::string::npos);
}

TEST_F(CliTest, ConfigKeyForOtherCommandIsRejected) {
  std::ofstream(path("run.cfg")) << "checkpoint = x\n";
  EXPECT_EQ(run({"synth", "--out", path("d.jsonl"), "--config", path("run.cfg")}).code, 1);
}

TEST_F(CliTest, TrainEvalExplainPipeline) {
  ASSERT_EQ(run({"synth", "--n", "24", "--out", path("d.jsonl")}).code, 0);
  auto args = small_model();
  args.insert(args.begin(), {"train", "--data", path("d.jsonl"), "--out", path("o")});
  ASSERT_EQ(run(args).code, 0);
  for (const char* f : {"checkpoint.json", "history.csv", "metrics.csv", "manifest.txt"})
    EXPECT_TRUE(fs::exists(path("o/") + f)) << f;

  // The manifest reproduces the run.
  ASSERT_EQ(run({"train", "--config", path("o/manifest.txt"), "--out", path("o2")}).code, 0);
  EXPECT_EQ(slurp(path("o/history.csv")), slurp(path("o2/history.csv")));

  const Result ev = run({"eval", "--data", path("d.jsonl"), "--checkpoint", path("o/checkpoint.json")});
  ASSERT_EQ(ev.code, 0) << ev.err;
  EXPECT_EQ(ev.out.rfind("variant,accuracy,precision,recall,f1\nFULL,", 0), 0u);

  const Result mismatch = run({"eval", "--data", path("d.jsonl"), "--checkpoint", path("o/checkpoint.json"), "--dim", "8"});
  EXPECT_EQ(mismatch.code, 1);

  const Result ex = run({"explain", "--data", path("d.jsonl"), "--checkpoint", path("o/checkpoint.json"), "--ids",
                         "synth-00000,synth-00003", "--out", path("x")});
  ASSERT_EQ(ex.code, 0) << ex.err;
  for (const char* f : {"synth-00000.json", "synth-00000.html", "synth-00003.json", "synth-00003.html"})
    EXPECT_TRUE(fs::exists(path("x/") + f)) << f;
  EXPECT_EQ(run({"explain", "--data", path("d.jsonl"), "--checkpoint", path("o/checkpoint.json"), "--ids", "nope",
                 "--out", path("x")})
                .code,
            1);
}

TEST_F(CliTest, AblateWritesFiveRows) {
  ASSERT_EQ(run({"synth", "--n", "24", "--out", path("d.jsonl")}).code, 0);
  auto args = small_model();
  args.insert(args.begin(), {"ablate", "--data", path("d.jsonl"), "--out", path("o")});
  ASSERT_EQ(run(args).code, 0);
  const std::string table = slurp(path("o/ablation.csv"));
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 6);
  for (const char* v : {"FULL,", "NO_R,", "NO_C,", "NO_CA,", "NO_IL,"}) EXPECT_NE(table.find(v), std::string::npos);
}

TEST_F(CliTest, GradcheckPasses) {
  const Result r = run({"gradcheck"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("max relative error"), std::string::npos);
}

TEST_F(CliTest, BinaryReportsUsageErrorStatus) {
  const std::string cmd = std::string(EMIF_CLI_PATH) + " bogus > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), 2);
}

}  // namespace
}  // namespace emif
