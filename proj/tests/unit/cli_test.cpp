#include <gtest/gtest.h>

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "qbo/cli.hpp"
#include "qbo/io/csv.hpp"

namespace {

struct Outcome {
  int code;
  std::string out, err;
};

Outcome run(std::vector<std::string> args) {
  args.insert(args.begin(), "qbo");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = qbo::cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string tmp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("qbo_cli_" + std::to_string(::getpid()) + "_" + name)).string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string without_timestamp(const std::string& s) {
  std::istringstream in(s);
  std::string line, out;
  while (std::getline(in, line))
    if (line.rfind("# timestamp:", 0) != 0) out += line + '\n';
  return out;
}

}  // namespace

TEST(Cli, ClassicalEquipartition) {
  const Outcome r = run({"variance", "--model", "classical", "--m", "1", "--omega", "1", "--gamma", "0.5", "--kbt",
                     "0.01", "--t", "1e9"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "0.01\n");
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"nonsense"}).code, 2);
  const Outcome neg = run({"variance", "--m", "-1", "--t", "1"});
  EXPECT_EQ(neg.code, 2);
  EXPECT_FALSE(neg.err.empty());
  EXPECT_EQ(run({"variance", "--model", "bogus", "--t", "1"}).code, 2);
  EXPECT_EQ(run({"variance", "--t", "1", "--t-grid", "0:1:2"}).code, 2);
  EXPECT_EQ(run({"variance", "--omega", "0", "--t", "1"}).code, 2);
  EXPECT_EQ(run({"kurtosis", "--t-grid", "1:2:3"}).code, 2);
  EXPECT_EQ(run({"derive", "--order", "3"}).code, 2);
  EXPECT_EQ(run({"sweep", "--figure", "1", "--panel", "left", "--lo", "1"}).code, 2);
  EXPECT_EQ(run({"montecarlo", "--dt", "1", "--n-traj", "10", "--t-end", "1", "--samples", "1"}).code, 2);
  EXPECT_EQ(run({"variance", "--t", "1", "--config", "/nonexistent/config.txt"}).code, 2);
}

TEST(Cli, Version) {
  const Outcome r = run({"--version"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find(qbo::io::kToolVersion), std::string::npos);
}

TEST(Cli, SweepPresetWritesFile) {
  const std::string path = tmp_path("sweep.csv");
  const Outcome r = run({"sweep", "--figure", "1", "--panel", "left", "--out", path});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto f = qbo::io::read_csv(path);
  EXPECT_EQ(f.rows.size(), 200u);
  EXPECT_EQ(f.columns.front(), "kbt");
  std::filesystem::remove(path);
}

TEST(Cli, ConfigReplayReproducesOutput) {
  const std::string first = tmp_path("first.csv"), second = tmp_path("second.csv");
  ASSERT_EQ(run({"kurtosis", "--model", "free", "--t-grid", "0:50:5", "--gamma", "0.002", "--out", first}).code, 0);
  ASSERT_EQ(run({"kurtosis", "--config", first, "--out", second}).code, 0);
  EXPECT_EQ(without_timestamp(slurp(first)), without_timestamp(slurp(second)));
  std::filesystem::remove(first);
  std::filesystem::remove(second);
}

TEST(Cli, FlagsOverrideConfig) {
  const std::string cfg = tmp_path("cfg.txt");
  std::ofstream(cfg) << "# comment\nmodel=classical\nm=1\nomega=1\ngamma=0.5\nkbt=0.02\n";
  Outcome r = run({"variance", "--config", cfg, "--t", "1e9"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "0.02\n");
  r = run({"variance", "--config", cfg, "--kbt", "0.01", "--t", "1e9"});
  EXPECT_EQ(r.out, "0.01\n");
  std::filesystem::remove(cfg);
}

TEST(Cli, ThreadEnvironment) {
  setenv("QBO_THREADS", "zero", 1);
  EXPECT_EQ(run({"montecarlo", "--n-traj", "10", "--t-end", "0.1", "--samples", "0.1"}).code, 2);
  setenv("QBO_THREADS", "2", 1);
  EXPECT_EQ(run({"montecarlo", "--n-traj", "10", "--t-end", "0.1", "--samples", "0.1"}).code, 0);
  unsetenv("QBO_THREADS");
}

TEST(Cli, MonteCarloColumns) {
  const Outcome r = run({"montecarlo", "--n-traj", "100", "--t-end", "0.2", "--samples", "0.1,0.2", "--seed", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("# seed: 3"), std::string::npos);
  EXPECT_NE(r.out.find("t,mean_x,se_mean_x"), std::string::npos);
  EXPECT_NE(r.out.find("var_x_closed_form"), std::string::npos);
}

TEST(Cli, DeriveOrderTwo) {
  const Outcome r = run({"derive", "--order", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("gamma"), std::string::npos);
  EXPECT_NE(r.out.find("kbt"), std::string::npos);
}

TEST(Cli, Table1Rows) {
  const Outcome r = run({"table1"});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* t : {"\n40,", "\n60,", "\n80,", "\n100,"}) EXPECT_NE(r.out.find(t), std::string::npos) << t;
}

TEST(Cli, VarianceGridAndPlotlessKurtosis) {
  const Outcome r = run({"variance", "--t-grid", "0,1,2"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("t,"), std::string::npos);
  const std::string svg = tmp_path("k.svg");
  ASSERT_EQ(run({"kurtosis", "--t-grid", "0:10:10", "--plot", svg}).code, 0);
  EXPECT_NE(slurp(svg).find("stroke=\"gray\""), std::string::npos);
  std::filesystem::remove(svg);
}
