#include <gtest/gtest.h>

#include <filesystem>
#include <limits>
#include <sstream>

#include "qreadout/cli.h"
#include "qreadout/io.h"

namespace qreadout::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("qreadout_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    config_ = (dir_ / "run.json").string();
    io::write_text(config_, json{{"shots_per_state", 40},
                                 {"sim", {{"seed", 3}, {"noise_sigma", 2.0}}},
                                 {"train", {{"epochs", 3}, {"lr0", 0.01}, {"batch_size", 32}}},
                                 {"pipelines", {"gmm", "filter+lstm"}}}
                                .dump());
  }
  void TearDown() override { fs::remove_all(dir_); }

  int cli(std::vector<std::string> args) {
    out_.str("");
    err_.str("");
    return run(args, out_, err_);
  }
  std::string p(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
  std::string config_;
  std::ostringstream out_, err_;
};

TEST_F(CliTest, SimulateShotCountAndReproducibility) {
  ASSERT_EQ(cli({"simulate", "--config", config_, "--shots-per-state", "10", "--out", p("a.bin")}), 0) << err_.str();
  EXPECT_EQ(io::read_dataset(p("a.bin")).shots.size(), 30u);
  ASSERT_EQ(cli({"simulate", "--config", config_, "--shots-per-state", "10", "--out", p("b.bin"), "--threads", "3"}), 0);
  EXPECT_EQ(io::read_text(p("a.bin")), io::read_text(p("b.bin")));
  ASSERT_EQ(cli({"simulate", "--config", config_, "--shots-per-state", "10", "--out", p("c.bin"), "--seed", "8"}), 0);
  EXPECT_NE(io::read_text(p("a.bin")), io::read_text(p("c.bin")));
  EXPECT_NE(out_.str().find("with a transition"), std::string::npos);
}

TEST_F(CliTest, TrainLogHasOneLinePerEpoch) {
  ASSERT_EQ(cli({"simulate", "--config", config_, "--out", p("d.bin")}), 0);
  ASSERT_EQ(cli({"train", "--config", config_, "--dataset", p("d.bin"), "--pipeline", "filter+lstm", "--out",
                 p("m.bin")}),
            0)
      << err_.str();
  EXPECT_NE(out_.str().find("1264 parameters"), std::string::npos);
  std::istringstream log(io::read_text(p("m.bin.log")));
  std::string line;
  int epochs = 0;
  while (std::getline(log, line)) {
    if (line.empty() || line[0] == '#') {
      continue;
    }
    EXPECT_EQ(line.rfind("epoch " + std::to_string(epochs) + " loss ", 0), 0u) << line;
    EXPECT_NE(line.find(" lr 0.01"), std::string::npos);
    ++epochs;
  }
  EXPECT_EQ(epochs, 3);

  ASSERT_EQ(cli({"train", "--config", config_, "--dataset", p("d.bin"), "--pipeline", "gmm", "--out", p("g.bin")}), 0);
  ASSERT_EQ(cli({"inspect", "--model", p("g.bin")}), 0);
  EXPECT_EQ(json::parse(out_.str()).at("param_count"), 18);
  ASSERT_EQ(cli({"evaluate", "--config", config_, "--dataset", p("d.bin"), "--model", p("g.bin"), "--out",
                 p("r.json")}),
            0);
  const json report = json::parse(io::read_text(p("r.json")));
  EXPECT_EQ(report.at("n_test"), 24);
  EXPECT_EQ(report.at("config_hash").get<std::string>().size(), 16u);
}

TEST_F(CliTest, CompareWithItselfHasNoExclusiveDisagreements) {
  ASSERT_EQ(cli({"simulate", "--config", config_, "--out", p("d.bin")}), 0);
  ASSERT_EQ(cli({"train", "--config", config_, "--dataset", p("d.bin"), "--pipeline", "gmm", "--out", p("g.bin")}), 0);
  ASSERT_EQ(cli({"compare", "--config", config_, "--dataset", p("d.bin"), "--model", p("g.bin"), "--model", p("g.bin"),
                 "--out", p("cmp")}),
            0)
      << err_.str();
  const json j = json::parse(io::read_text(p("cmp/comparison.json")));
  EXPECT_EQ(j.at("disagreements").at("a_only_correct"), 0);
  EXPECT_EQ(j.at("disagreements").at("b_only_correct"), 0);
  for (const char* f : {"comparison.txt", "disagreements.csv", "scatter_all.csv", "scatter_all.svg",
                        "scatter_a_only_correct.svg", "scatter_b_only_correct.csv"}) {
    EXPECT_TRUE(fs::exists(dir_ / "cmp" / f)) << f;
  }
  EXPECT_EQ(io::read_text(p("cmp/scatter_all.csv")).rfind("# config_hash=", 0), 0u);
}

TEST_F(CliTest, CompareSkipsIncompatibleModels) {
  ASSERT_EQ(cli({"simulate", "--config", config_, "--out", p("d.bin")}), 0);
  ASSERT_EQ(cli({"train", "--config", config_, "--dataset", p("d.bin"), "--pipeline", "gmm", "--out", p("g.bin")}), 0);
  io::write_text(p("short.json"),
                 json{{"shots_per_state", 40}, {"sim", {{"duration_ns", 800.0}}}, {"pipelines", {"gmm"}}}.dump());
  ASSERT_EQ(cli({"simulate", "--config", p("short.json"), "--out", p("s.bin")}), 0);
  EXPECT_EQ(cli({"compare", "--config", config_, "--dataset", p("s.bin"), "--model", p("g.bin"), "--model",
                 p("g.bin"), "--out", p("cmp")}),
            kExitValidation);
  EXPECT_NE(err_.str().find("warning: skipping"), std::string::npos);
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(cli({}), kExitValidation);
  EXPECT_EQ(cli({"frobnicate"}), kExitValidation);
  EXPECT_EQ(cli({"--help"}), kExitOk);
  EXPECT_EQ(cli({"evaluate", "--dataset", p("missing.bin"), "--model", p("missing.model")}), kExitIo);
  io::write_text(p("bad.json"), "{\"sim\": {\"duration_ns\": 5}}");
  EXPECT_EQ(cli({"simulate", "--config", p("bad.json"), "--out", p("x.bin")}), kExitValidation);
  io::write_text(p("broken.json"), "{not json");
  EXPECT_EQ(cli({"simulate", "--config", p("broken.json"), "--out", p("x.bin")}), kExitValidation);
  ASSERT_EQ(cli({"simulate", "--config", config_, "--out", p("d.bin")}), 0);
  EXPECT_EQ(cli({"train", "--config", config_, "--dataset", p("d.bin"), "--pipeline", "dnn"}), kExitValidation);

  // A corrupted trace makes the training loss non-finite.
  sim::Dataset ds = io::read_dataset(p("d.bin"));
  ds.shots[5].samples[100] = std::numeric_limits<float>::quiet_NaN();
  io::write_dataset(p("nan.bin"), ds);
  io::write_text(p("nan.json"), json{{"sim", {{"seed", 3}}},
                                     {"train", {{"epochs", 1}}},
                                     {"pipelines", {{{"preset", "lstm"}, {"weighting", {{"type", "uniform"}}}}}}}
                                    .dump());
  EXPECT_EQ(cli({"train", "--config", p("nan.json"), "--dataset", p("nan.bin"), "--pipeline", "lstm", "--out",
                 p("x.model")}),
            kExitNumerical)
      << err_.str();
  EXPECT_NE(err_.str().find("batch"), std::string::npos);
}

TEST(RunConfigTest, DuplicateNamesRejectedAndDefaultsComplete) {
  EXPECT_THROW(run_config_from_json(json{{"pipelines", {"gmm", "gmm"}}}), std::invalid_argument);
  const RunConfig cfg = run_config_from_json(json::object());
  EXPECT_EQ(cfg.pipelines.size(), io::pipeline_preset_names().size());
  EXPECT_EQ(cfg.shots_per_state, 25000u);
  EXPECT_EQ(run_config_from_json(to_json(cfg)).pipelines, cfg.pipelines);
}

}  // namespace
}  // namespace qreadout::cli
