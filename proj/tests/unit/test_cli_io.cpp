// Copyright 2026 The linfel Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at

//     https://www.apache.org/licenses/LICENSE-2.0

// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <yaml-cpp/yaml.h>

#include "linfel/cli_io.hpp"
#include "linfel/errors.hpp"

namespace linfel {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  fs::path p = fs::temp_directory_path() / ("linfel-test-" + std::to_string(::getpid())) /
               (std::string(info->test_suite_name()) + "." + info->name()) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kOracleConfig = R"(mode: solve
seed: 7
problem:
  coefficients: identity
  reaction: zero
grid:
  extent: [1]
  nodes: [NODES]
boundary:
  preset: hermite
  parameters: [1, 0]
solver:
  p_max: 128
  early_stop: false
)";

RunConfig oracle_config(int nodes) {
  std::string text = kOracleConfig;
  text.replace(text.find("NODES"), 5, std::to_string(nodes));
  return parse_config(text);
}

TEST(Config, RoundTrip) {
  const std::string text = R"(mode: certify
seed: 12345678901
output: out/dir
problem:
  coefficients: affine
  coefficient_parameters: [2, 0.1, 1, 0.5, 0, 0, 0, 0, 0.25]
  reaction: polynomial
  reaction_parameters: [0.5, -1, 0, -0.25]
grid:
  extent: [1.5, 0.75]
  nodes: [17, 13]
boundary:
  preset: exp_sin
  parameters: [3]
solver:
  p_start: 4
  p_max: 64
  tolerance: 1e-8
  max_iterations: 200
  early_stop: false
  stop_tolerance: 0.01
  sigma: 0.3
  p0: 3.5
diagnostics:
  mc_trials: 50
  amplitudes: [0.05, 0.005]
  run_mc: false
  el1: 0.1
)";
  RunConfig a = parse_config(text);
  EXPECT_EQ(a.mode, RunMode::kCertify);
  EXPECT_EQ(a.seed, 12345678901ull);
  EXPECT_EQ(a.grid.nodes[1], 13);
  ASSERT_TRUE(a.solver.sigma.has_value());
  EXPECT_DOUBLE_EQ(*a.solver.sigma, 0.3);
  EXPECT_EQ(a.problem.reaction_parameters.size(), 4u);
  RunConfig b = parse_config(to_yaml(a));
  EXPECT_TRUE(a == b);
  EXPECT_EQ(to_yaml(a), to_yaml(b));
}

TEST(Config, UnknownKeyReportsLine) {
  const std::string text = "mode: solve\nseed: 1\ngrid:\n  extent: [1]\n  nodes: [33]\n  spacing: 0.1\n";
  try {
    parse_config(text);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line(), 6);
    EXPECT_NE(e.field().find("grid"), std::string::npos);
  }
}

TEST(Config, RejectsInvalidValues) {
  EXPECT_THROW(parse_config("mode: solve\ngrid:\n  extent: [1]\n  nodes: [33]\n"), ConfigError);
  EXPECT_THROW(parse_config("mode: solve\nseed: 1\ngrid:\n  extent: [1]\n  nodes: [3]\n"), ConfigError);
  EXPECT_THROW(parse_config("mode: fly\nseed: 1\ngrid:\n  extent: [1]\n  nodes: [33]\n"), ConfigError);
  EXPECT_THROW(parse_config("mode: solve\nseed: 1\ngrid:\n  extent: [1]\n  nodes: [33]\nsolver:\n  p_start: 1\n"),
               ConfigError);
  EXPECT_THROW(parse_config("mode: solve\nseed: 1\ngrid:\n  extent: [1, 1]\n  nodes: [9, 9]\nboundary:\n"
                            "  preset: hermite\n  parameters: [1, 0]\n"),
               ConfigError);
  EXPECT_THROW(parse_config("mode: solve\nseed: 1\ngrid: [\n"), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/linfel.yaml"), ConfigError);
}

TEST(Config, BundledScenariosParse) {
  for (const auto& entry : fs::directory_iterator(LINFEL_SCENARIO_DIR)) {
    if (entry.path().extension() != ".yaml") continue;
    RunConfig c = load_config(entry.path());
    EXPECT_NO_THROW(build_problem(c)) << entry.path();
    EXPECT_TRUE(parse_config(to_yaml(c)) == c) << entry.path();
  }
}

TEST(FormatNumber, ShortestRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 4.0, 123456789.0}) {
    EXPECT_EQ(std::stod(format_number(v)), v);
  }
  EXPECT_EQ(format_number(std::numeric_limits<double>::quiet_NaN()), ".nan");
  EXPECT_EQ(format_number(std::numeric_limits<double>::infinity()), ".inf");
  EXPECT_EQ(format_number(-std::numeric_limits<double>::infinity()), "-.inf");
}

TEST(BuildProblem, NodalTableMatchesPreset) {
  fs::path dir = scratch("nodal");
  RunConfig preset = parse_config("mode: solve\nseed: 1\ngrid:\n  extent: [1, 1]\n  nodes: [9, 9]\n"
                                  "boundary:\n  preset: exp_sin\n  parameters: [2]\n");
  ProblemSpec a = build_problem(preset);
  write_text(dir / "u0.csv", field_csv(a.boundary().u0));
  RunConfig nodal = parse_config("mode: solve\nseed: 1\ngrid:\n  extent: [1, 1]\n  nodes: [9, 9]\n"
                                 "boundary:\n  preset: nodal\n  table: u0.csv\n",
                                 dir);
  ProblemSpec b = build_problem(nodal);
  EXPECT_EQ((a.boundary().u0.values() - b.boundary().u0.values()).cwiseAbs().maxCoeff(), 0.0);
  RunConfig wrong = nodal;
  wrong.grid.nodes = {11, 11};
  EXPECT_THROW(build_problem(wrong), ConfigError);
}

TEST(Run, OracleReport) {
  RunConfig c = oracle_config(129);
  c.mode = RunMode::kOracle1D;
  c.oracle.brute_force_cells = 100;
  c.oracle.brute_force_starts = 4;
  fs::path dir = scratch("oracle");
  RunArtifact art = run(c, dir);
  EXPECT_EQ(art.exit_code, kExitOk);
  YAML::Node r = YAML::LoadFile((dir / "report.yaml").string());
  EXPECT_EQ(r["result"]["e_infty"].as<double>(), 4.0);
  EXPECT_EQ(r["result"]["switch"].as<double>(), 0.5);
  EXPECT_EQ(r["exit"]["code"].as<int>(), 0);
  EXPECT_EQ(r["provenance"]["seed"].as<std::string>(), "7");
  EXPECT_TRUE(fs::exists(dir / "u.csv"));
  EXPECT_TRUE(fs::exists(dir / "f.csv"));
}

TEST(Run, ZeroDataSolveUsesAdjointKernel) {
  RunConfig c = load_config(fs::path(LINFEL_SCENARIO_DIR) / "harmonic_2d.yaml");
  fs::path dir = scratch("zero");
  RunArtifact art = run(c, dir);
  EXPECT_EQ(art.exit_code, kExitOk) << art.message;
  YAML::Node r = YAML::LoadFile((dir / "report.yaml").string());
  EXPECT_LE(r["result"]["e_infty_estimate"].as<double>(), 1e-10);
  ASSERT_TRUE(r["result"]["adjoint_kernel"]);
  EXPECT_NEAR(r["result"]["adjoint_kernel"]["l1_norm"].as<double>(), 1.0, 1e-12);
  EXPECT_LE(r["result"]["adjoint_kernel"]["residual"].as<double>(), 1e-8);
}

TEST(Run, DeterministicTablesAndReflexiveCompare) {
  RunConfig c = oracle_config(129);
  fs::path a = scratch("a"), b = scratch("b");
  run(c, a);
  run(c, b);
  for (const char* f : {"u.csv", "S.csv", "f.csv", "history.csv"}) {
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
    EXPECT_FALSE(slurp(a / f).empty());
  }
  CompareReport self = compare(a, a);
  EXPECT_TRUE(self.identical());
  EXPECT_TRUE(self.pass());
  CompareReport twin = compare(a, b);
  EXPECT_TRUE(twin.identical());
  EXPECT_NE(to_yaml(twin).find("identical: true"), std::string::npos);
}

TEST(Run, TamperedArtifactFailsCompare) {
  RunConfig c = oracle_config(129);
  fs::path a = scratch("a"), b = scratch("b");
  run(c, a);
  fs::copy(a, b, fs::copy_options::recursive | fs::copy_options::overwrite_existing);
  std::string u = slurp(b / "u.csv");
  std::size_t line = u.find('\n', u.size() / 2);
  std::size_t comma = u.find(',', line);
  u.insert(comma + 1, "9");
  write_text(b / "u.csv", u);
  CompareReport rep = compare(a, b);
  EXPECT_FALSE(rep.identical());
  EXPECT_FALSE(rep.pass());
  EXPECT_GT(rep.fields.at("u").linf, 0.0);
}

TEST(Run, GridRefinementWithinOnePercent) {
  fs::path a = scratch("coarse"), b = scratch("fine");
  run(oracle_config(257), a);
  run(oracle_config(513), b);
  CompareReport rep = compare(a, b, 1.0);
  YAML::Node ra = YAML::LoadFile((a / "report.yaml").string());
  double e = ra["result"]["e_infty_estimate"].as<double>();
  EXPECT_LE(rep.e_infty_delta, 0.01 * e);
  EXPECT_LT(rep.fields.at("u").linf, 1e-2);
}

TEST(Run, CompareRejectsDifferentProblems) {
  fs::path a = scratch("a"), b = scratch("b");
  run(oracle_config(65), a);
  RunConfig other = oracle_config(65);
  other.boundary.parameters = {1.0, 1.0};
  run(other, b);
  EXPECT_THROW(compare(a, b), ConfigError);
}

TEST(Run, ExitCodes) {
  RunConfig c = oracle_config(129);
  c.solver.max_iterations = 1;
  EXPECT_EQ(run(c, scratch("iter")).exit_code, kExitNotConverged);
  RunConfig d = oracle_config(129);
  d.diagnostics.duality = 0.0;
  d.diagnostics.normalization = 0.0;
  RunArtifact art = run(d, scratch("invariant"));
  EXPECT_EQ(art.exit_code, kExitInvariant);
  EXPECT_FALSE(art.message.empty());
}

#ifdef LINFEL_CLI_PATH
int shell(const std::string& cmd) {
  int status = std::system((cmd + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Cli, ExitCodesFromBinary) {
  const std::string cli = LINFEL_CLI_PATH;
  const fs::path dir = scratch("cli");
  const std::string scen = std::string(LINFEL_SCENARIO_DIR) + "/oracle_1d.yaml";
  EXPECT_EQ(shell(cli + " oracle1d --config " + scen + " --out " + (dir / "o").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "o" / "report.yaml"));
  write_text(dir / "bad.yaml", "mode: solve\nseed: 1\nbogus: 3\n");
  EXPECT_EQ(shell(cli + " solve --config " + (dir / "bad.yaml").string() + " --out " + (dir / "b").string()), 2);
  EXPECT_EQ(shell(cli + " compare " + (dir / "o").string() + " " + (dir / "o").string()), 0);
  EXPECT_NE(shell(cli + " --version"), 2);
}
#endif

}  // namespace
}  // namespace linfel
