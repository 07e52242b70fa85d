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

#ifndef LINFEL_CLI_IO_HPP_
#define LINFEL_CLI_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "linfel/diagnostics.hpp"
#include "linfel/problem.hpp"
#include "linfel/solver.hpp"

namespace linfel {

enum class RunMode { kSolve, kCertify, kDiagnose, kOracle1D };

std::string to_string(RunMode mode);

struct ProblemConfig {
  /// identity | constant (a11, a12, a22) | affine (a0, ax, ay as three triples)
  std::string coefficients = "identity";
  std::vector<double> coefficient_parameters;
  /// zero | linear (c0, cy, cz...) | cubic | power (alpha, coeff) | sine (coeff)
  /// | polynomial (c0, c1, ...)
  std::string reaction = "zero";
  std::vector<double> reaction_parameters;
  bool operator==(const ProblemConfig&) const = default;
};

struct GridConfig {
  std::vector<double> extent;
  std::vector<int> nodes;
  bool operator==(const GridConfig&) const = default;
};

struct BoundaryConfig {
  /// hermite (a, b) | zero | harmonic | exp_sin (k) | sine (k) | nodal
  std::string preset = "zero";
  std::vector<double> parameters;
  /// CSV "x[,y],value" over all nodes, for preset nodal.
  std::string table;
  bool operator==(const BoundaryConfig&) const = default;
};

struct SolverConfig {
  double p_start = 2.0;
  double p_max = 256.0;
  double tolerance = 1e-9;
  int max_iterations = 500;
  bool early_stop = true;
  double stop_tolerance = 1e-3;
  std::optional<double> sigma;
  std::optional<double> p0;
  double zero_threshold = 1e-8;
  bool operator==(const SolverConfig&) const = default;
};

struct DiagnosticsConfig {
  int mc_trials = 200;
  std::vector<double> amplitudes{1e-1, 1e-2, 1e-3};
  bool run_mc = true;
  bool energy_identities = true;
  double el1 = 0.05;
  double flatness = 0.05;
  double el2 = 1e-6;
  double normalization = 1e-8;
  double duality = 1e-10;
  bool operator==(const DiagnosticsConfig&) const = default;
};

struct OracleConfig {
  double a = 1.0;
  double b = 0.0;
  int brute_force_cells = 400;
  int brute_force_starts = 20;
  bool operator==(const OracleConfig&) const = default;
};

struct RunConfig {
  RunMode mode = RunMode::kSolve;
  std::uint64_t seed = 0;
  std::string output;
  ProblemConfig problem;
  GridConfig grid;
  BoundaryConfig boundary;
  SolverConfig solver;
  DiagnosticsConfig diagnostics;
  OracleConfig oracle;
  /// Directory relative table paths resolve against; not serialised.
  std::filesystem::path base_dir;
  bool operator==(const RunConfig& other) const;
};

/// Strict parse: unknown keys, wrong types and out-of-range values raise
/// ConfigError with the offending field and line.
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);
std::string to_yaml(const RunConfig& config);

/// Shortest decimal that round-trips the double.
std::string format_number(double value);

ProblemSpec build_problem(const RunConfig& config);

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitConfig = 2, kExitNotConverged = 3, kExitInvariant = 4 };

struct RunArtifact {
  std::filesystem::path directory;
  int exit_code = kExitOk;
  std::string message;
  std::optional<ContinuationState> state;
  std::optional<CertificateReport> certificate;
  std::optional<Oracle1DSolution> oracle;
};

/// Runs the configured mode and writes report.yaml, the field tables and
/// history.csv into `out_dir`. Configuration problems propagate as
/// ConfigError; solver and invariant failures are reported through
/// exit_code with a well-formed partial artifact.
RunArtifact run(const RunConfig& config, const std::filesystem::path& out_dir);

/// CSV table "x[,y],value" in row-major node order.
std::string field_csv(const ScalarField& field);
void write_text(const std::filesystem::path& path, const std::string& text);

struct FieldDistance {
  double linf = 0.0;
  double l1 = 0.0;
};

struct CompareReport {
  std::map<std::string, FieldDistance> fields;
  double e_infty_delta = 0.0;
  double history_linf = 0.0;
  std::vector<std::string> verdict_changes;
  double tolerance = 0.0;
  bool identical() const;
  bool pass() const;
};

/// Diffs two artifact directories. Throws ConfigError when grids or problems
/// differ.
CompareReport compare(const std::filesystem::path& a, const std::filesystem::path& b, double tolerance = 0.0);
std::string to_yaml(const CompareReport& report);

}  // namespace linfel

#endif  // LINFEL_CLI_IO_HPP_
