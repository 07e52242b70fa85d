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

#ifndef LINFEL_SOLVER_HPP_
#define LINFEL_SOLVER_HPP_

#include <optional>
#include <string>
#include <vector>

#include "linfel/functional.hpp"
#include "linfel/grid.hpp"
#include "linfel/problem.hpp"

namespace linfel {

struct InnerOptions {
  int max_iterations = 500;
  /// Exit when ‖scaled gradient‖∞ ≤ tolerance·max(1, e_p).
  double tolerance = 1e-9;
  /// Consecutive rejected model steps before falling back to gradient descent.
  int max_model_failures = 5;
  /// Energies at or below zero_threshold·(1 + max|S(u0)|) count as a minimum.
  double zero_threshold = 1e-8;
};

struct InnerReport {
  bool converged = false;
  int iterations = 0;
  int accepted_steps = 0;
  int gradient_steps = 0;
  double initial_energy = 0.0;
  EnergyValue energy;
  /// ‖scaled gradient‖∞ at exit and the tolerance it was held to.
  double grad_norm = 0.0;
  double tolerance = 0.0;
  /// Exit on a Newton decrement below energy rounding rather than on grad_norm.
  bool stationary_at_rounding = false;
  /// Relative mismatch between the exit gradient (scaled) and the assembled
  /// S*_u f + 2σ|Ω| div div(φA) residual at free nodes.
  double el2_mismatch = 0.0;
};

struct InnerResult {
  ScalarField u;
  InnerReport report;
};

/// Minimises E_p^σ over u0 + (free nodes) by damped Gauss–Newton with Armijo
/// backtracking. Deterministic. Throws DomainError if the energy at the start
/// is not finite.
InnerResult minimize_inner(const ProblemSpec& spec, const EnergyParams& params, const ScalarField& warm_start,
                           const InnerOptions& options = {});

struct AdjointKernel {
  enum class Branch { kBoundaryValue, kKernel };
  ScalarField f;  // normalised to ‖f‖_{L¹} = 1, nonnegative mean
  Branch branch = Branch::kBoundaryValue;
  double condition_estimate = 0.0;
  /// max over free nodes |apply_adjoint f| / (‖f‖∞ ‖adjoint operator‖∞).
  double residual = 0.0;
  bool converged = true;
  int power_iterations = 0;
};

/// Solves S*_u f = 0 at operator nodes with f = 1 on the boundary. When that
/// system is numerically singular (1-norm condition estimate above 1e14) the
/// smallest singular vector of the homogeneous problem is returned instead.
AdjointKernel solve_adjoint_kernel(const ProblemSpec& spec, const ScalarField& u);

enum class ContinuationMode { kConstruct, kCertify };

struct ContinuationOptions {
  double p_start = 2.0;
  double p_max = 256.0;
  /// Stop once |e_{2p} − e_p|/e_p < stop_tolerance for `stop_after`
  /// consecutive doublings.
  double stop_tolerance = 1e-3;
  int stop_after = 2;
  bool early_stop = true;
  InnerOptions inner;
  /// Certify mode: the anchor u★ (required) and an optional σ override.
  std::optional<ScalarField> anchor;
  std::optional<double> sigma;
  std::optional<double> p0;
  /// e_p ≤ zero_threshold·scale triggers the adjoint-kernel branch.
  double zero_threshold = 1e-8;
  /// Record E_p^σ(u0) at each level for the warm-start comparison.
  bool record_cold_start = true;
};

struct LevelRecord {
  double p = 0.0;
  EnergyValue energy;
  InnerReport inner;
  double warm_start_energy = 0.0;
  double cold_start_energy = 0.0;
  double normalization_residual = 0.0;
  double duality_residual = 0.0;
  double e_sup = 0.0;  // max |S(u_p)| over operator nodes, an upper bound for e∞
};

struct ContinuationState {
  ContinuationMode mode = ContinuationMode::kConstruct;
  std::vector<double> schedule;
  int index = 0;  // last completed level
  ScalarField u;
  std::vector<LevelRecord> history;
  double sigma = 0.0;
  double p0 = 2.0;
  std::optional<ScalarField> anchor;
  MultiplierSet multipliers;
  /// 1 + max|S(u0)|, the reference for the zero threshold.
  double scale = 1.0;
  bool all_converged = true;
  bool stopped_early = false;
  bool monotone = true;
  /// Certify mode: a_p nonincreasing from p = 8 on.
  bool penalty_decreasing = true;
  std::optional<AdjointKernel> kernel;
};

/// σ default for certify mode: 10(E_2(u★) + 1)/(‖A:D²u★‖²_{L^{p0}} + 1).
double default_sigma(const ProblemSpec& spec, const ScalarField& anchor, double p0);

ContinuationState run_continuation(const ProblemSpec& spec, ContinuationMode mode,
                                   const ContinuationOptions& options = {});

}  // namespace linfel

#endif  // LINFEL_SOLVER_HPP_
