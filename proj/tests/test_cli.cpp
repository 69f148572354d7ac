#include <gtest/gtest.h>

#include <filesystem>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "rootflow/io/csv.hpp"
#include "rootflow/io/experiment.hpp"

using namespace rootflow;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "rootflow");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string payload(const fs::path& result) {
  auto j = nlohmann::json::parse(io::read_text_file(result));
  j.erase("timing");
  return j.dump();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("rootflow_test_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

const std::vector<std::string> kTinyTraining{"--epochs", "1", "--hidden-units", "6", "--batch-size", "32"};

}  // namespace

TEST_F(CliTest, EvalOnChain) {
  io::save_graph_csv(path("chain.csv"), scm::Dag::chain(3));
  auto r = run({"eval", "--order", "1,2,3", "--graph", path("chain.csv")});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "0\n");
  r = run({"eval", "--order", "3,2,1", "--graph", path("chain.csv")});
  EXPECT_EQ(r.out, "2\n");
  io::write_text_file(path("order.txt"), "2,1,3\n");
  r = run({"eval", "--order-file", path("order.txt"), "--graph", path("chain.csv")});
  EXPECT_EQ(r.out, "1\n");
}

TEST_F(CliTest, ExitCodes) {
  io::save_graph_csv(path("chain.csv"), scm::Dag::chain(3));
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  EXPECT_EQ(run({"eval", "--graph", path("chain.csv"), "--order", "1,2", "--order-file", path("chain.csv")}).code, 2);
  EXPECT_EQ(run({"discover"}).code, 2);
  EXPECT_EQ(run({"discover", "--data", path("missing.csv")}).code, 2);
  const auto bad = run({"eval", "--order", "1,2", "--graph", path("chain.csv")});
  EXPECT_EQ(bad.code, 1);
  EXPECT_NE(bad.err.find("error:"), std::string::npos);
  EXPECT_EQ(run({"eval", "--graph", path("chain.csv")}).code, 1);
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST_F(CliTest, SynthIsReproducible) {
  for (const char* sub : {"a", "b"})
    ASSERT_EQ(run({"synth", "--d", "4", "--n", "50", "--seed", "3", "--out-dir", path(sub)}).code, 0);
  for (const char* f : {"data.csv", "graph.csv"})
    EXPECT_EQ(io::read_text_file(dir_ / "a" / f), io::read_text_file(dir_ / "b" / f));
  const auto ds = io::load_dataset_csv(dir_ / "a" / "data.csv");
  EXPECT_EQ(ds.d(), 4u);
  EXPECT_EQ(ds.n(), 50u);
  EXPECT_EQ(io::load_graph_csv(dir_ / "a" / "graph.csv").size(), 4u);
  ASSERT_EQ(run({"synth", "--d", "4", "--n", "50", "--seed", "4", "--out-dir", path("c")}).code, 0);
  EXPECT_NE(io::read_text_file(dir_ / "a" / "data.csv"), io::read_text_file(dir_ / "c" / "data.csv"));
}

TEST_F(CliTest, DiscoverySubcommandsAreDeterministicAcrossThreadCounts) {
  ASSERT_EQ(run({"synth", "--d", "3", "--n", "80", "--seed", "1", "--out-dir", path("")}).code, 0);
  const std::vector<std::string> input{"--data", path("data.csv"), "--graph", path("graph.csv"), "--out-dir",
                                       path("out")};
  for (const std::string sub : {"discover", "discover-perm", "varsort"}) {
    std::vector<std::string> base{sub};
    base.insert(base.end(), input.begin(), input.end());
    if (sub != "varsort") base.insert(base.end(), kTinyTraining.begin(), kTinyTraining.end());
    std::vector<std::string> payloads, orders, stdouts;
    for (const char* threads : {"1", "1", "3"}) {
      auto args = base;
      if (sub != "varsort") {
        args.push_back("--threads");
        args.push_back(threads);
      }
      const auto r = run(args);
      ASSERT_EQ(r.code, 0) << sub << ": " << r.err;
      payloads.push_back(payload(dir_ / "out" / "result.json"));
      orders.push_back(io::read_text_file(dir_ / "out" / "order.txt"));
      stdouts.push_back(r.out);
    }
    EXPECT_EQ(payloads[0], payloads[1]) << sub;
    EXPECT_EQ(payloads[0], payloads[2]) << sub;
    EXPECT_EQ(orders[0], orders[2]) << sub;
    EXPECT_EQ(stdouts[0], stdouts[2]) << sub;
    EXPECT_NE(stdouts[0].find("count_backward: "), std::string::npos);
  }
}

TEST_F(CliTest, BenchMatchesDirectRun) {
  io::ExperimentConfig cfg;
  cfg.method = io::Method::sequential;
  cfg.d = 3;
  cfg.n = 80;
  cfg.seeds = {0, 1};
  cfg.epochs = 1;
  cfg.hidden_units = 6;
  cfg.batch_size = 32;
  cfg.threads = 1;
  io::write_text_file(path("config.json"), io::to_json(cfg).dump(2));
  auto r = run({"bench", "--config", path("config.json"), "--out", path("r1.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("2 seeds, 0 failed"), std::string::npos);
  r = run({"bench", "--config", path("config.json"), "--out", path("r2.json"), "--threads", "2"});
  ASSERT_EQ(r.code, 0) << r.err;

  cfg.output = path("r1.json");
  auto direct = io::to_json(io::run_experiment(cfg), false);
  EXPECT_EQ(payload(path("r1.json")), direct.dump());
  // Only the output path differs between the two bench runs.
  auto a = nlohmann::json::parse(payload(path("r1.json")));
  auto b = nlohmann::json::parse(payload(path("r2.json")));
  a["config"].erase("output");
  b["config"].erase("output");
  EXPECT_EQ(a, b);
}

TEST_F(CliTest, OutputDirectoryFromEnvironment) {
  ::setenv("ROOTFLOW_OUTPUT_DIR", path("env").c_str(), 1);
  const auto r = run({"synth", "--d", "2", "--n", "10"});
  ::unsetenv("ROOTFLOW_OUTPUT_DIR");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir_ / "env" / "data.csv"));
}
