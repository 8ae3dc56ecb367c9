#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>

#include "empathy/empathy.hpp"

namespace fs = std::filesystem;

namespace empathy {
namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

const fs::path& Root() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / "empathy_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

Run Cli(const std::string& args) {
  const auto out = Root() / "stdout.txt", err = Root() / "stderr.txt";
  const std::string cmd = std::string(EMPATHY_CLI_PATH) + " " + args + " > " + out.string() +
                          " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = ReadFile(out);
  r.err = ReadFile(err);
  return r;
}

std::string Decoupled() { return std::string(EMPATHY_SOURCE_DIR) + "/configs/decoupled.cfg"; }

std::size_t CountFiles(const fs::path& dir, const std::string& ext) {
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(dir)) n += e.path().extension() == ext;
  return n;
}

// One shared pipeline, built in order by the tests below.
class Pipeline : public ::testing::Test {
 protected:
  static fs::path Dir() { return Root() / "pipeline"; }
  static std::string Base() { return "--config " + Decoupled() + " --out " + Dir().string(); }
};

TEST(CliErrors, BadConfigExitsWithTwo) {
  const auto cfg = Root() / "bad.cfg";
  WriteFile(cfg, "dt = -1\n");
  auto r = Cli("solve --config " + cfg.string() + " --out " + (Root() / "bad").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("config error"), std::string::npos);
  WriteFile(cfg, "no_such_key = 3\n");
  EXPECT_EQ(Cli("solve --config " + cfg.string()).code, 2);
  EXPECT_EQ(Cli("solve --epsilon 2").code, 2);
  EXPECT_EQ(Cli("frobnicate").code, 2);
}

TEST(CliErrors, EmptyTrainingSplitIsNumericalFailure) {
  const auto dir = Root() / "empty";
  fs::create_directories(dir);
  const auto cfg = ParseConfig(ReadFile(Decoupled()));
  std::string csv;
  AppendCsvRow(csv, DatasetColumns());
  WriteFile(dir / "dataset.csv", csv);
  nlohmann::json meta = {{"version", kDatasetFormatVersion},
                         {"config_hash", ConfigHash(cfg)},
                         {"test_sample", {{"kind", "latin_hypercube"}, {"seed", 36}}},
                         {"records", 0},
                         {"solves", nlohmann::json::array()},
                         {"swap_checks", nlohmann::json::array()}};
  WriteFile(dir / "dataset.json", meta.dump());
  const auto r = Cli("train --config " + Decoupled() + " --out " + dir.string());
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("numerical failure"), std::string::npos);
}

TEST_F(Pipeline, A_SolveWritesTrajectoriesAndManifest) {
  const auto r = Cli("solve " + Base() + " --mesh-spacing 5 --test-points 2");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(r.out.empty());
  // 4 grid points x 4 pairs for training plus 2 x 4 test solves.
  EXPECT_EQ(CountFiles(Dir() / "trajectories", ".csv"), 24u);
  const auto m = nlohmann::json::parse(ReadFile(Dir() / "manifest.json"));
  EXPECT_EQ(m.at("config_hash"), ConfigHash(ParseConfig(ReadFile(Decoupled()))));
  EXPECT_EQ(m.at("dataset").at("converged"), 24);
  const auto again = Cli("solve " + Base() + " --mesh-spacing 5 --test-points 2");
  ASSERT_EQ(again.code, 0);
  EXPECT_NE(again.err.find("cached"), std::string::npos);
  EXPECT_EQ(again.err.find("FAILED"), std::string::npos);
}

TEST_F(Pipeline, B_TrainWritesFourSurrogatesAndTable) {
  const auto r = Cli("train " + Base() + " --epochs 3 --C 0.5 --lr 0.01");
  ASSERT_EQ(r.code, 0) << r.err;
  for (const auto& theta : AllThetaPairs()) {
    const auto path = Dir() / SurrogateFileName(theta);
    ASSERT_TRUE(fs::exists(path));
    const auto net = ReadSurrogate(path);
    EXPECT_EQ(net.theta, theta);
    EXPECT_EQ(net.training.costate_weight, 0.5);
    EXPECT_EQ(net.training.epochs, 3);
    EXPECT_EQ(SurrogateToJson(ReadSurrogate(path)), SurrogateToJson(net));
    EXPECT_NE(r.out.find(ThetaPairName(theta)), std::string::npos);
  }
  EXPECT_NE(r.out.find("test_V"), std::string::npos);
}

TEST_F(Pipeline, C_SimulateEmitsOneLogPairAndIgnoresSeed) {
  const auto scenario = Root() / "one.json";
  WriteFile(scenario, R"j({"x0": [16.0, 17.5], "prior_id": "a",
                           "truth": ["(na,ln)", "(na,ln)"], "estimation": ["e", "e"]})j");
  auto r = Cli("simulate " + Base() + " --scenario " + scenario.string());
  ASSERT_EQ(r.code, 0) << r.err;
  const auto csv = ReadFile(Dir() / "one.csv");
  const auto meta = nlohmann::json::parse(ReadFile(Dir() / "one.json"));
  EXPECT_EQ(meta.at("steps"), 61);
  r = Cli("simulate " + Base() + " --scenario " + scenario.string() + " --seed 99");
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.err.find("no effect"), std::string::npos);
  EXPECT_EQ(ReadFile(Dir() / "one.csv"), csv);

  r = Cli("simulate --config " + Decoupled() + " --out " + (Root() / "noweights").string() +
          " --scenario " + scenario.string());
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("missing surrogate"), std::string::npos);
}

TEST_F(Pipeline, D_SweepAndReportRegeneration) {
  auto r = Cli("sweep " + Base() + " --mesh-spacing 5 --jobs 2");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("|X0'|="), std::string::npos);
  EXPECT_EQ(CountFiles(Dir() / "logs", ".csv"), 32u);
  const auto report = nlohmann::json::parse(ReadFile(Dir() / "report.json"));
  for (const char* h : {"hypothesis1", "hypothesis2"}) {
    EXPECT_TRUE(report.at(h).contains("pass"));
    for (const auto& cell : report.at(h).at("cells")) EXPECT_TRUE(cell.contains("pass"));
  }
  const auto again = Root() / "regenerated";
  r = Cli("report --config " + Decoupled() + " --mesh-spacing 5 --logs " +
          (Dir() / "logs").string() + " --out " + again.string());
  ASSERT_EQ(r.code, 0) << r.err;
  const auto regenerated = nlohmann::json::parse(ReadFile(again / "report.json"));
  EXPECT_EQ(regenerated.at("digest"), report.at("digest"));
  EXPECT_EQ(ReadFile(again / "outcomes.csv"), ReadFile(Dir() / "outcomes.csv"));
}

TEST_F(Pipeline, E_ConfigMismatchAborts) {
  // Default config against weights trained on the decoupled game.
  auto r = Cli("sweep --out " + (Root() / "mismatch").string() + " --weights " +
               Dir().string() + " --mesh-spacing 5");
  EXPECT_EQ(r.code, 2);
  r = Cli("report --mesh-spacing 5 --logs " + (Dir() / "logs").string() + " --out " +
          (Root() / "mismatch").string());
  EXPECT_EQ(r.code, 2);
  // Same weights, different epsilon: allowed, but not into the existing manifest.
  r = Cli("sweep " + Base() + " --mesh-spacing 5 --epsilon 0.1");
  EXPECT_EQ(r.code, 2);
  r = Cli("sweep --config " + Decoupled() + " --out " + (Root() / "eps").string() +
          " --weights " + Dir().string() + " --mesh-spacing 5 --epsilon 0.1");
  EXPECT_EQ(r.code, 0) << r.err;
}

}  // namespace
}  // namespace empathy
