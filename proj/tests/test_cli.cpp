#include <gtest/gtest.h>

#include <l2c/csv.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

namespace fs = std::filesystem;

namespace {

const std::string kCli = L2C_CLI_PATH;
const std::string kScenarios = L2C_SCENARIO_DIR;

int run(const std::string& args) {
  const int status = std::system((kCli + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("l2c_cli_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

}  // namespace

TEST(Cli, OptimizeIsDeterministicAcrossThreadCounts) {
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  const std::string sc = " --scenario " + kScenarios + "/consensus_toy.json";
  ASSERT_EQ(run("optimize" + sc + " --out " + a.string()), 0);
  ASSERT_EQ(run("optimize" + sc + " --threads 2 --out " + b.string()), 0);
  for (const char* f : {"agent0_primal.csv", "agent1_copy.csv", "agent0_duals.csv", "residuals.csv", "manifest.json"})
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
}

TEST(Cli, ResidualsHaveOneRowPerIterationAndAgent) {
  const fs::path out = scratch("rows");
  ASSERT_EQ(run("optimize --scenario " + kScenarios + "/consensus_toy.json --iters 7 --out " + out.string()), 0);
  const l2c::CsvTable t = l2c::read_csv((out / "residuals.csv").string());
  ASSERT_EQ(t.rows.size(), 14u);
  EXPECT_EQ(t.rows.back()[t.column("iteration")], 7.0);
}

TEST(Cli, TrajectoryCsvRoundTrips) {
  const fs::path out = scratch("csv");
  ASSERT_EQ(run("optimize --scenario " + kScenarios + "/consensus_toy.json --iters 2 --out " + out.string()), 0);
  const l2c::CsvTable t = l2c::read_csv((out / "agent0_primal.csv").string());
  ASSERT_EQ(t.header.size(), 4u);  // step, x0, x1, u0
  ASSERT_EQ(t.rows.size(), 21u);
  EXPECT_TRUE(std::isnan(t.rows.back()[3]));
  l2c::write_csv((out / "copy.csv").string(), t);
  EXPECT_EQ(slurp(out / "copy.csv"), slurp(out / "agent0_primal.csv"));
}

TEST(Cli, ExitCodes) {
  const fs::path out = scratch("exit");
  EXPECT_EQ(run("optimize --out " + out.string()), 1);
  EXPECT_EQ(run("optimize --scenario /nonexistent.json --out " + out.string()), 1);
  EXPECT_EQ(run("bench --repeats 3 --out " + out.string()), 1);

  fs::create_directories(out);
  std::ofstream(out / "bad_theta.json") << R"({"theta": [1, 2]})";
  EXPECT_EQ(run("optimize --scenario " + kScenarios + "/consensus_toy.json --theta " + (out / "bad_theta.json").string() +
                " --out " + out.string()),
            1);
  std::ofstream(out / "bad_scenario.json") << R"({"schema_version": 99})";
  EXPECT_EQ(run("optimize --scenario " + (out / "bad_scenario.json").string() + " --out " + out.string()), 1);
  EXPECT_EQ(run("--version"), 0);
}

TEST(Cli, GradcheckReportsSolverAgreement) {
  const fs::path out = scratch("grad");
  ASSERT_EQ(run("gradcheck --scenario " + kScenarios + "/consensus_toy.json --out " + out.string()), 0);
  const std::string report = slurp(out / "report.json");
  EXPECT_NE(report.find("centralized_qp_relative_frobenius"), std::string::npos);
  EXPECT_NE(report.find("pipeline_vs_fd"), std::string::npos);
}
