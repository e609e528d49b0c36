// Drives the satgame executable end to end and checks exit codes and output.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "satgame/network.hpp"

namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           (std::string("satgame_cli_") + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  CliResult run(const std::string& args) const {
    const std::string cmd = std::string(SATGAME_CLI) + " " + args + " >" + (dir_ / "stdout").string() + " 2>" +
                            (dir_ / "stderr").string();
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(dir_ / "stdout"), slurp(dir_ / "stderr")};
  }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, GenerateWritesFilesAndManifest) {
  const auto r = run("generate --vars 20 --clauses 91 --sat 100 --unsat 100 --seed 7 --out " + (dir_ / "set").string());
  ASSERT_EQ(r.code, 0) << r.err;
  int cnf = 0;
  for (const auto& e : fs::directory_iterator(dir_ / "set")) cnf += e.path().extension() == ".cnf";
  EXPECT_EQ(cnf, 200);
  const auto manifest = nlohmann::json::parse(slurp(dir_ / "set" / "manifest.json"));
  int sat = 0, unsat = 0;
  for (const auto& e : manifest.at("instances")) (e.at("label") == "SAT" ? sat : unsat)++;
  EXPECT_EQ(sat, 100);
  EXPECT_EQ(unsat, 100);
}

TEST_F(CliTest, SolvePrintsVerdictModelAndDecisions) {
  std::ofstream(dir_ / "f.cnf") << "p cnf 3 3\n1 2 0\n-1 3 0\n-2 -3 0\n";
  const auto r = run("solve --policy vsids " + (dir_ / "f.cnf").string());
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream lines(r.out);
  std::string verdict, model, decisions;
  std::getline(lines, verdict);
  std::getline(lines, model);
  std::getline(lines, decisions);
  EXPECT_EQ(verdict, "SAT");
  ASSERT_EQ(model.rfind("v ", 0), 0u);
  std::istringstream lits(model.substr(2));
  std::vector<int> m;
  for (int x; lits >> x && x != 0;) m.push_back(x);
  ASSERT_EQ(m.size(), 3u);
  const auto val = [&](int v) { return m[static_cast<std::size_t>(v - 1)] > 0; };
  EXPECT_TRUE((val(1) || val(2)) && (!val(1) || val(3)) && (!val(2) || !val(3)));
  EXPECT_EQ(decisions.rfind("decisions ", 0), 0u);

  std::ofstream(dir_ / "u.cnf") << "p cnf 1 2\n1 0\n-1 0\n";
  const auto u = run("solve " + (dir_ / "u.cnf").string());
  EXPECT_EQ(u.code, 0);
  EXPECT_EQ(u.out, "UNSAT\ndecisions 0\n");
}

TEST_F(CliTest, UsageErrorsExitOne) {
  auto r = run("frobnicate");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("Usage"), std::string::npos);
  EXPECT_TRUE(r.out.empty());
  r = run("evaluate --bogus-flag 3 --set x");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("Usage"), std::string::npos);
  r = run("");
  EXPECT_EQ(r.code, 1);
  r = run("--seed 1 generate --sat 1 --unsat 0 --vars 5 --clauses 3 --out " + (dir_ / "g").string());
  ASSERT_EQ(r.code, 0) << r.err;
  r = run("evaluate --policy greedy-q --set " + (dir_ / "g").string());
  EXPECT_EQ(r.code, 1);
  r = run("evaluate --policy minisat --set " + (dir_ / "g").string());
  EXPECT_EQ(r.code, 1);
}

TEST_F(CliTest, CheckpointForOtherVariableCountExitsTwo) {
  ASSERT_EQ(run("--seed 2 generate --sat 2 --unsat 2 --out " + (dir_ / "set").string()).code, 0);
  satgame::Architecture a;
  a.vars = 10;
  a.conv_filters = {2};
  a.dense_units = 4;
  a.head = satgame::HeadKind::q;
  satgame::Network(a, 1).save(dir_ / "v10.ckpt");
  const auto r = run("evaluate --policy greedy-q --checkpoint " + (dir_ / "v10.ckpt").string() + " --set " +
                     (dir_ / "set").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("shape"), std::string::npos);

  std::ofstream(dir_ / "junk.ckpt") << "not a checkpoint";
  EXPECT_EQ(run("evaluate --policy greedy-q --checkpoint " + (dir_ / "junk.ckpt").string() + " --set " +
                (dir_ / "set").string())
                .code,
            2);
}

TEST_F(CliTest, LabelMismatchExitsThree) {
  ASSERT_EQ(run("--seed 3 generate --sat 2 --unsat 2 --out " + (dir_ / "set").string()).code, 0);
  auto manifest = nlohmann::json::parse(slurp(dir_ / "set" / "manifest.json"));
  for (auto& e : manifest.at("instances")) e["label"] = e.at("label") == "SAT" ? "UNSAT" : "SAT";
  std::ofstream(dir_ / "set" / "manifest.json", std::ios::trunc) << manifest.dump(2);
  const auto r = run("evaluate --set " + (dir_ / "set").string());
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("soundness"), std::string::npos);
}

TEST_F(CliTest, EvaluateIsByteIdenticalAcrossRunsAndThreads) {
  ASSERT_EQ(run("--seed 4 generate --sat 3 --unsat 3 --out " + (dir_ / "set").string()).code, 0);
  const std::string set = (dir_ / "set").string();
  const auto a = run("--seed 9 evaluate --policy random --verbose --set " + set);
  const auto b = run("--seed 9 evaluate --policy random --verbose --set " + set);
  const auto c = run("--seed 9 --threads 3 evaluate --policy random --verbose --set " + set);
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(a.out, c.out);
  const auto report = nlohmann::json::parse(a.out);
  EXPECT_EQ(report.at("instances"), 6);
  EXPECT_EQ(report.at("rows").size(), 6u);
}

TEST_F(CliTest, TrainResumeAndSweep) {
  const std::string train = (dir_ / "train").string(), test = (dir_ / "test").string();
  ASSERT_EQ(run("--seed 5 generate --sat 2 --unsat 2 --prefix tr --out " + train).code, 0);
  ASSERT_EQ(run("--seed 6 generate --sat 2 --unsat 2 --prefix te --out " + test).code, 0);
  std::ofstream(dir_ / "cfg.json") << R"({"architecture": {"conv_filters": [2], "dense_units": 8},
    "search": {"num_simulations": 4}, "iterations": 2, "episodes_per_iteration": 2,
    "batch_size": 4, "train_steps": 2})";
  const std::string cfg = "--config " + (dir_ / "cfg.json").string();
  auto r = run(cfg + " train-zero --train " + train + " --test " + test + " --out " + (dir_ / "full").string());
  ASSERT_EQ(r.code, 0) << r.err;
  r = run(cfg + " train-zero --train " + train + " --out " + (dir_ / "part").string() + " --stop-after 1");
  ASSERT_EQ(r.code, 0) << r.err;
  r = run("train-zero --resume " + (dir_ / "part").string());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(dir_ / "part" / "checkpoints" / "model-2.ckpt"),
            slurp(dir_ / "full" / "checkpoints" / "model-2.ckpt"));

  r = run("sweep --run " + (dir_ / "full").string() + " --test " + test);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 1 + 3 * 2 + 4);
  const auto again = run("sweep --run " + (dir_ / "full").string() + " --test " + test);
  EXPECT_EQ(again.out, r.out);
  // Overlapping train and test sets are refused.
  EXPECT_EQ(run(cfg + " train-zero --train " + train + " --test " + train + " --out " + (dir_ / "x").string()).code,
            1);
}
