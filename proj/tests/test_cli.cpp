// Copyright 2026 The NeuroMoE Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

namespace {

namespace fs = std::filesystem;

const fs::path kWork = fs::temp_directory_path() / "neuromoe_cli_test";

const char* kSmall =
    " --set volume_shape=8x8x8 --set d_model=8 --set num_heads=2 --set num_layers=1"
    " --set ffn_hidden=16 --set epochs=3 --set counts=8,8,8";

int run(const std::string& args) {
  const std::string cmd = std::string("\"") + NEUROMOE_CLI_PATH + "\" " + args + " > \"" +
                          (kWork / "stdout.txt").string() + "\" 2> \"" +
                          (kWork / "stderr.txt").string() + "\"";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::string path(const std::string& name) { return "\"" + (kWork / name).string() + "\""; }

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    fs::remove_all(kWork);
    fs::create_directories(kWork);
    ASSERT_EQ(run("gen-data --seed 7 --out " + path("cohort.nmoe") + kSmall), 0)
        << slurp(kWork / "stderr.txt");
  }
  static void TearDownTestSuite() { fs::remove_all(kWork); }
};

TEST_F(Cli, TrainTwiceIsByteIdentical) {
  for (const char* dir : {"run_a", "run_b"})
    ASSERT_EQ(run("train -q --data " + path("cohort.nmoe") + " --seed 7 --out " + path(dir) +
                  kSmall),
              0)
        << slurp(kWork / "stderr.txt");
  for (const char* f : {"metrics.csv", "best.nmck", "history.csv", "utilization.csv"})
    EXPECT_EQ(slurp(kWork / "run_a" / f), slurp(kWork / "run_b" / f)) << f;
  EXPECT_FALSE(slurp(kWork / "run_a" / "metrics.csv").empty());
  EXPECT_NE(slurp(kWork / "stdout.txt").find("accuracy"), std::string::npos);
}

std::vector<std::string> fields(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  for (std::string f; std::getline(ss, f, ',');) out.push_back(f);
  return out;
}

TEST_F(Cli, EvalMatchesBestEpoch) {
  ASSERT_EQ(run("train -q --data " + path("cohort.nmoe") + " --seed 3 --out " + path("run_e") +
                kSmall),
            0);
  ASSERT_EQ(run("eval -q --data " + path("cohort.nmoe") + " --config " +
                path("run_e/run.cfg") + " --checkpoint " + path("run_e/best.nmck") +
                " --out " + path("eval_e")),
            0)
      << slurp(kWork / "stderr.txt");
  std::stringstream train_csv(slurp(kWork / "run_e" / "metrics.csv"));
  std::stringstream eval_csv(slurp(kWork / "eval_e" / "metrics.csv"));
  std::string header, trow, erow;
  std::getline(train_csv, header);
  std::getline(train_csv, trow);
  std::getline(eval_csv, header);
  std::getline(eval_csv, erow);
  const auto t = fields(trow), e = fields(erow);
  ASSERT_GE(t.size(), 9u);
  ASSERT_GE(e.size(), 9u);
  for (std::size_t i : {2u, 3u, 4u, 5u, 7u, 8u}) EXPECT_EQ(t[i], e[i]) << header;

  std::stringstream hist(slurp(kWork / "run_e" / "history.csv"));
  std::string line;
  std::getline(hist, line);
  const auto cols = fields(line);
  const auto acc_col = std::find(cols.begin(), cols.end(), "test_accuracy") - cols.begin();
  double best = -1;
  while (std::getline(hist, line))
    best = std::max(best, std::stod(fields(line)[static_cast<std::size_t>(acc_col)]));
  EXPECT_NEAR(std::stod(e[3]), best, 1e-6);
}

TEST_F(Cli, AblateTableShape) {
  ASSERT_EQ(run("ablate -q --data " + path("cohort.nmoe") + " --seeds 1,2 --out " +
                path("abl") + kSmall + " --set epochs=1"),
            0)
      << slurp(kWork / "stderr.txt");
  const auto csv = slurp(kWork / "abl" / "metrics.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 6 * 4);
  const auto out = slurp(kWork / "stdout.txt");
  for (const char* n : {"full", "w/o gate", "w/o aMRI", "w/o DTI", "w/o fMRI",
                        "w/o serum/clinical"})
    EXPECT_NE(out.find(n), std::string::npos) << n;
}

TEST_F(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("train --bogus-flag"), 2);
  EXPECT_EQ(run("train --data " + path("missing.nmoe")), 2);
  EXPECT_EQ(run("train --data " + path("cohort.nmoe") + " --mode sometimes"), 2);
  EXPECT_EQ(run("eval --data " + path("cohort.nmoe")), 2);
}

TEST_F(Cli, ValidationErrorsExitThree) {
  EXPECT_EQ(run("train -q --data " + path("cohort.nmoe") + " --lambda -1"), 3);
  EXPECT_EQ(run("train -q --data " + path("cohort.nmoe") + " --set epochs=0"), 3);
  EXPECT_EQ(run("train -q --data " + path("cohort.nmoe") + " --set no_such_key=1"), 3);
  EXPECT_FALSE(slurp(kWork / "stderr.txt").empty());
  std::ofstream(kWork / "junk.nmoe") << "not a dataset";
  EXPECT_EQ(run("train -q --data " + path("junk.nmoe")), 3);
}

TEST_F(Cli, WrongCheckpointArchitectureExitsThree) {
  ASSERT_EQ(run("train -q --data " + path("cohort.nmoe") + " --out " + path("run_m") + kSmall +
                " --set epochs=1"),
            0);
  EXPECT_EQ(run("eval -q --data " + path("cohort.nmoe") + " --checkpoint " +
                path("run_m/best.nmck") + kSmall + " --set expert_hidden=16"),
            3);
  EXPECT_NE(slurp(kWork / "stderr.txt").find("fingerprint"), std::string::npos);
}

TEST_F(Cli, ReportWritesUtilization) {
  ASSERT_EQ(run("train -q --data " + path("cohort.nmoe") + " --out " + path("run_r") + kSmall +
                " --set epochs=1"),
            0);
  ASSERT_EQ(run("report -q --data " + path("cohort.nmoe") + " --config " +
                path("run_r/run.cfg") + " --checkpoint " + path("run_r/best.nmck") +
                " --out " + path("rep")),
            0)
      << slurp(kWork / "stderr.txt");
  EXPECT_TRUE(fs::exists(kWork / "rep" / "utilization.svg"));
  EXPECT_NE(slurp(kWork / "rep" / "utilization.csv").find("mean,"), std::string::npos);
}

}  // namespace
