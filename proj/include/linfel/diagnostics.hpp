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

#ifndef LINFEL_DIAGNOSTICS_HPP_
#define LINFEL_DIAGNOSTICS_HPP_

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "linfel/functional.hpp"
#include "linfel/grid.hpp"
#include "linfel/problem.hpp"

namespace linfel {

/// Residuals of the limiting system |f| S(u) = e f, S*_u f = 0 for a
/// candidate triple (u, f, e).
struct ElCheck {
  double e = 0.0;
  /// max | |f| S − e f | / (e ‖f‖∞) over operator nodes.
  double el1_residual = 0.0;
  /// max | |S| − e | / e over the effective support |f| > δ‖f‖∞.
  double flatness = 0.0;
  /// max_j |Σ w f L_u φ_j| / (‖f‖_{L¹} ‖L_u φ_j‖∞) over the bump basis.
  double el2_residual = 0.0;
  /// Operator nodes with f S < 0, or f ≠ 0 where S = 0.
  int sign_violations = 0;
  int support_nodes = 0;
  /// Share of ‖f‖_{L¹} on boundary-adjacent nodes.
  double boundary_layer_mass = 0.0;
  bool degenerate = false;
};

struct ElCheckOptions {
  double support_fraction = 1e-3;
  int basis_size = 50;
  std::uint64_t basis_seed = 0x0b5e55edull;
};

/// Uses the grid operator S(u) for EL1 and flatness.
ElCheck check_el_system(const ProblemSpec& spec, const ScalarField& u, const ScalarField& f, double e,
                        const ElCheckOptions& options = {});
/// Same with S supplied as nodal samples, e.g. exact second derivatives.
ElCheck check_el_system(const ProblemSpec& spec, const ScalarField& u, const Vector& s_values,
                        const ScalarField& f, double e, const ElCheckOptions& options = {});

/// Fixed deterministic family of product quintic bumps vanishing on the
/// boundary and boundary-adjacent layers.
std::vector<ScalarField> clamped_bump_basis(const GridPtr& grid, int count, std::uint64_t seed);

/// max(‖φ‖∞, maxₖ ‖∂ₖφ‖∞) with grid derivatives.
double w1inf_norm(const ScalarField& phi);

/// E∞(u) = max |S(u)| over operator nodes.
double sup_energy(const ProblemSpec& spec, const ScalarField& u);

struct AlmostMinimiserOptions {
  int trials = 200;
  std::vector<double> amplitudes{1e-1, 1e-2, 1e-3};
  /// Bumps per random perturbation.
  int modes = 4;
  std::uint64_t seed = 0;
  /// Added to M = 2 C₂.
  double slack = 1e-6;
  /// Worker threads; 0 reads LINFEL_THREADS (default 1).
  int threads = 0;
  /// Half-width of the (y, Du) box sampled for C₂; 0 uses the largest amplitude.
  double taylor_radius = 0.0;
};

struct AmplitudeStats {
  double amplitude = 0.0;
  double max_d = 0.0;
  int violations = 0;
};

struct AlmostMinimiserStats {
  int trials = 0;
  /// Evaluations: each trial tests φ and −φ at every amplitude.
  int evaluations = 0;
  int violations = 0;
  /// Largest D(φ) = (E∞(u) − E∞(u + φ)) / ‖φ‖²_{W^{1,∞}} observed.
  double fitted_m = 0.0;
  double c2_bound = 0.0;
  double m_theory = 0.0;
  /// Energy differences below this are rounding and never count.
  double noise_floor = 0.0;
  std::vector<AmplitudeStats> per_amplitude;
  /// max D does not blow up as the amplitude shrinks.
  bool amplitude_stable = true;
  bool pass() const { return violations == 0; }
};

/// Monte-Carlo test of E∞(u) ≤ E∞(u + φ) + M ‖φ‖²_{W^{1,∞}} over clamped φ.
AlmostMinimiserStats almost_minimiser_mc(const ProblemSpec& spec, const ScalarField& u,
                                         const AlmostMinimiserOptions& options = {});

struct AronssonResult {
  /// max over interior nodes of |S| |D S| / (e · e / h_min), e = max |S|.
  double value = 0.0;
  int node = -1;
  Vector nodal;
};

/// Restricted to |f| > δ‖f‖∞ when a multiplier is given.
AronssonResult aronsson_residual(const ProblemSpec& spec, const ScalarField& u,
                                 const std::optional<ScalarField>& f = std::nullopt,
                                 double support_fraction = 1e-3);

struct CollarError {
  double radius = 0.0;
  double error = 0.0;
  int nodes = 0;
};

struct CorrectorResult {
  ScalarField v;
  ScalarField rho;
  std::vector<CollarError> collar;
  /// Nodes where 2 A : Dρ ⊗ Dρ fell below the ellipticity floor.
  int floor_nodes = 0;
  bool floor_applied() const { return floor_nodes > 0; }
};

/// Distance to the boundary of the box, with the pairwise minima blended by
/// a cubic smooth minimum of width `blend`. Returns values and gradients.
void smoothed_distance(const Grid& grid, double blend, Vector& rho, std::array<Vector, 2>& grad);

/// v = u0 + ρ² h / λ̃ with h = g − S'_u u0 and λ̃ = max(2 A : Dρ ⊗ Dρ, λ).
CorrectorResult boundary_corrector(const ProblemSpec& spec, const ScalarField& g_target, const ScalarField& u);

struct EnergyIdentity {
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;  // |lhs − rhs| / max(|lhs|, |rhs|), 0 when both vanish
};

/// Integration-by-parts identities for S = Δu + g(u) by trapezoid quadrature.
/// Keys: "energy1", "energy2", "combined". Throws std::invalid_argument
/// unless A = I and b is a scalar reaction g(u).
std::map<std::string, EnergyIdentity> energy_identities(const ProblemSpec& spec, const ScalarField& u,
                                                        double beta = 4.0);

/// Closed-form minimiser of ess sup |u''| on (0, 1) with u(0) = u'(0) = 0,
/// u(1) = a, u'(1) = b: u'' = sign · e∞ · sgn(s − x).
struct Oracle1DSolution {
  double a = 0.0;
  double b = 0.0;
  double e_infty = 0.0;
  std::optional<double> switch_point;
  /// Sign of u'' on [0, s).
  int sign = 1;

  double u(double x) const;
  double du(double x) const;
  double d2u(double x) const;
  /// Affine multiplier vanishing at s with ∫₀¹ |f| = 1.
  double f(double x) const;
  /// max(|u(1) − a|, |u'(1) − b|).
  double boundary_residual() const;

  ScalarField sample_u(const GridPtr& grid) const;
  ScalarField sample_f(const GridPtr& grid) const;
  Vector sample_d2u(const GridPtr& grid) const;
};

/// Throws std::invalid_argument for (a, b) = (0, 0).
Oracle1DSolution oracle_1d(double a, double b);

struct BruteForce1D {
  double e_infty = 0.0;
  int starts = 0;
  int iterations = 0;
};

/// Independent estimate of e∞ for the piecewise-constant-u'' problem on
/// `cells` cells: its dual max_θ θ·(a, b) / Σ_k H |θ·v_k| is maximised over
/// the angle of θ by subgradient ascent from random starts.
BruteForce1D oracle_1d_brute_force(double a, double b, int cells = 400, int starts = 20,
                                   std::uint64_t seed = 1);

/// Position of the sign change of f along a 1-D grid, linearly interpolated.
std::optional<double> zero_crossing_1d(const ScalarField& f);

struct Verdict {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

struct CertificateThresholds {
  double el1 = 0.05;
  double flatness = 0.05;
  double el2 = 1e-6;
  double normalization = 1e-8;
  double duality = 1e-10;
};

struct CertificateOptions {
  CertificateThresholds thresholds;
  ElCheckOptions el;
  AlmostMinimiserOptions mc;
  bool run_mc = true;
  bool run_energy_identities = true;
};

struct CertificateReport {
  double e_infty_estimate = 0.0;
  double e_sup = 0.0;
  ElCheck el;
  double normalization_residual = 0.0;
  double duality_residual = 0.0;
  double aronsson_residual = 0.0;
  std::optional<AlmostMinimiserStats> almost_min;
  std::map<std::string, double> energy_identity_residuals;
  std::vector<Verdict> verdicts;
  bool pass() const;
};

/// Full certificate of (u, multipliers) with e = e_p.
CertificateReport certify(const ProblemSpec& spec, const ScalarField& u, const MultiplierSet& multipliers,
                          const CertificateOptions& options = {});

}  // namespace linfel

#endif  // LINFEL_DIAGNOSTICS_HPP_
