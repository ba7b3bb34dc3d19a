#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "kdiffnet/io.hpp"

#ifdef KDIFFNET_CLI_PATH

namespace kdiffnet {
namespace {

namespace fs = std::filesystem;

struct CliRun {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("kdiffnet_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  CliRun run(const std::string& args) {
    const fs::path out = dir_ / "stdout.txt";
    const fs::path err = dir_ / "stderr.txt";
    const std::string cmd = "cd '" + dir_.string() + "' && '" + std::string(KDIFFNET_CLI_PATH) + "' " +
                            args + " > '" + out.string() + "' 2> '" + err.string() + "'";
    const int status = std::system(cmd.c_str());
    CliRun r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
  }

  std::size_t data_rows(const fs::path& table) {
    std::ifstream in(table);
    std::string line;
    std::size_t rows = 0;
    std::getline(in, line);
    while (std::getline(in, line)) {
      if (!line.empty() && line[0] != '#') ++rows;
    }
    return rows;
  }

  fs::path dir_;
};

constexpr const char* kEgSpec =
    "simulate --setting EG --p 30 --n-c 60 --n-d 60 --num-groups 2 --group-size 3 --seed 4";

TEST_F(CliTest, SimulateGroupBundle) {
  const CliRun r = run("simulate --setting G --p 10 --num-groups 1 --group-size 3 --out g");
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"x_c.csv", "x_d.csv", "groups.txt", "true_delta.csv", "metadata.kv", "manifest.kv"}) {
    EXPECT_TRUE(fs::exists(dir_ / "g" / f)) << f;
  }
  EXPECT_FALSE(fs::exists(dir_ / "g" / "w_e.csv"));
  EXPECT_NE(r.out.find("g"), std::string::npos);
}

TEST_F(CliTest, SimulateIsByteDeterministic) {
  ASSERT_EQ(run(std::string(kEgSpec) + " --out a").code, 0);
  ASSERT_EQ(run(std::string(kEgSpec) + " --out b").code, 0);
  for (const char* f : {"x_c.csv", "x_d.csv", "true_delta.csv", "w_e.csv", "groups.txt"}) {
    EXPECT_EQ(slurp(dir_ / "a" / f), slurp(dir_ / "b" / f)) << f;
  }
  ASSERT_EQ(run(std::string(kEgSpec) + " --format bin --out c").code, 0);
  EXPECT_TRUE(fs::exists(dir_ / "c" / "x_c.bin"));
}

TEST_F(CliTest, SpecErrorNamesField) {
  const CliRun r = run("simulate --setting G --p 5 --num-groups 3 --group-size 2 --out bad");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("num_groups"), std::string::npos) << r.err;
  std::ofstream(dir_ / "spec.kv") << "p = 20\nsparsity = 2\n";
  const CliRun c = run("simulate --config spec.kv --out bad2");
  EXPECT_EQ(c.code, 2);
  EXPECT_NE(c.err.find("sparsity"), std::string::npos) << c.err;
}

TEST_F(CliTest, FitKnowledgeRequirements) {
  ASSERT_EQ(run("simulate --setting G --p 10 --num-groups 1 --group-size 3 --out g").code, 0);
  EXPECT_EQ(run("fit --data g --method diffee --lambda 0.1 --out f1").code, 0);
  EXPECT_EQ(run("fit --data g --method kdiffnet-g --lambda 0.1 --out f2").code, 0);
  ASSERT_EQ(run("simulate --setting E --p 10 --out e").code, 0);
  const CliRun r = run("fit --data e --method kdiffnet-eg --lambda 0.1 --out f3");
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("node groups"), std::string::npos) << r.err;
}

TEST_F(CliTest, FitThenScoreMatchesSweepPoint) {
  ASSERT_EQ(run(std::string(kEgSpec) + " --out ds").code, 0);
  for (const char* method : {"diffee", "kdiffnet-e", "kdiffnet-g", "kdiffnet-eg"}) {
    const std::string m(method);
    const std::string common = " --data ds --method " + m + " --lambda 0.15 --eps 1 --v 0.1 --max-iter 200";
    ASSERT_EQ(run("fit" + common + " --out fit_" + m).code, 0);
    const CliRun score = run("score --result fit_" + m + " --out fit_" + m);
    ASSERT_EQ(score.code, 0) << score.err;
    ASSERT_EQ(run("sweep" + common + " --out sw_" + m).code, 0);
    const io::KeyValues s = io::read_key_values(dir_ / ("fit_" + m) / "score.kv");
    const io::KeyValues sw = io::read_key_values(dir_ / ("sw_" + m) / "summary.kv");
    EXPECT_EQ(s.get_double("f1"), sw.get_double("best_f1")) << m;
  }
}

TEST_F(CliTest, ScoreNeedsOnlyTheBundle) {
  ASSERT_EQ(run(std::string(kEgSpec) + " --out ds").code, 0);
  ASSERT_EQ(run("fit --data ds --method kdiffnet-e --lambda 0.2 --v 0.1 --out fit").code, 0);
  fs::remove_all(dir_ / "ds");
  const CliRun r = run("score --result fit");
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("f1\t"), std::string::npos);
}

TEST_F(CliTest, SweepThreeLambdas) {
  ASSERT_EQ(run(std::string(kEgSpec) + " --out ds").code, 0);
  const CliRun r = run("sweep --data ds --method kdiffnet-e --lambda 0.05,0.1,0.2 --v 0.1 --out sw");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(data_rows(dir_ / "sw" / "sweep.tsv"), 3u);
  const io::KeyValues s = io::read_key_values(dir_ / "sw" / "summary.kv");
  EXPECT_EQ(s.get_int("points"), 3);
  EXPECT_TRUE(s.has("auc"));
  EXPECT_TRUE(s.has("best_f1"));
}

TEST_F(CliTest, SweepFailedPointsGiveNonzeroExit) {
  ASSERT_EQ(run("simulate --p 30 --n-c 10 --n-d 10 --out small").code, 0);
  const CliRun r = run("sweep --data small --method diffee --lambda 0.1 --v 0,0.5 --out sw");
  EXPECT_EQ(r.code, 5) << r.err;
  EXPECT_EQ(data_rows(dir_ / "sw" / "sweep.tsv"), 2u);
  const io::KeyValues s = io::read_key_values(dir_ / "sw" / "summary.kv");
  EXPECT_EQ(s.get_int("failures"), 1);
}

TEST_F(CliTest, NonConvergenceIsOnlyAWarning) {
  ASSERT_EQ(run(std::string(kEgSpec) + " --out ds").code, 0);
  const CliRun r = run("fit --data ds --method kdiffnet-eg --lambda 0.1 --v 0.1 --max-iter 2 --out fit");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.err.find("warning"), std::string::npos);
  EXPECT_FALSE(io::load_result(dir_ / "fit").network.converged);
}

TEST_F(CliTest, RateFourSizes) {
  const CliRun r = run("rate --p 20 --n-list 40,80,160,320 --trials 2 --seed 3 --out rate");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(data_rows(dir_ / "rate" / "rate.tsv"), 4u);
  EXPECT_NE(slurp(dir_ / "rate" / "rate.tsv").find("# slope"), std::string::npos);
  EXPECT_NE(r.out.find("slope"), std::string::npos);
}

TEST_F(CliTest, BenchClosedFormsSameOrder) {
  const CliRun r = run("bench --p 200 --methods diffee,kdiffnet-e --repeats 3 --out b");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(data_rows(dir_ / "b" / "bench.tsv"), 2u);
  std::ifstream in(dir_ / "b" / "bench.tsv");
  std::string line;
  std::getline(in, line);
  std::vector<double> per;
  while (std::getline(in, line)) {
    std::istringstream cells(line);
    std::string method, p, n, mean;
    cells >> method >> p >> n >> mean;
    per.push_back(io::parse_double(mean));
  }
  ASSERT_EQ(per.size(), 2u);
  EXPECT_LT(std::max(per[0], per[1]) / std::min(per[0], per[1]), 10.0);
}

TEST_F(CliTest, FlagsOverrideConfigAndManifestRoundTrips) {
  ASSERT_EQ(run(std::string(kEgSpec) + " --out ds").code, 0);
  std::ofstream(dir_ / "fit.kv") << "method = kdiffnet-g\nlambda = 0.5\nv = 0.1\n";
  ASSERT_EQ(run("fit --config fit.kv --data ds --lambda 0.2 --out fit").code, 0);
  const io::ResultBundle r = io::load_result(dir_ / "fit");
  EXPECT_EQ(r.meta.get("method"), "kdiffnet-g");
  EXPECT_EQ(r.meta.get_double("lambda_n"), 0.2);
  const io::RunManifest m = io::RunManifest::from_kv(io::read_key_values(dir_ / "fit" / "manifest.kv"));
  EXPECT_EQ(m.command, "fit");
  EXPECT_EQ(m.config.get("lambda"), "0.2");
  for (const auto& [name, path] : m.inputs) EXPECT_TRUE(fs::exists(path)) << name;
  EXPECT_EQ(io::RunManifest::from_kv(m.to_kv()), m);
}

TEST_F(CliTest, ErrorExitCodes) {
  EXPECT_EQ(run("fit --data nowhere").code, 4);
  ASSERT_EQ(run("simulate --p 10 --out ds").code, 0);
  EXPECT_EQ(run("fit --data ds --lambda abc").code, 2);
  EXPECT_EQ(run("fit --data ds --method nope").code, 2);
  EXPECT_EQ(run("fit --data ds --lambda -1").code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
  EXPECT_EQ(run("--help").code, 0);
}

}  // namespace
}  // namespace kdiffnet

#endif
