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

#ifndef LINFEL_FUNCTIONAL_HPP_
#define LINFEL_FUNCTIONAL_HPP_

#include <optional>

#include "linfel/grid.hpp"
#include "linfel/problem.hpp"

namespace linfel {

/// Exponents and penalty of E_p^σ(u) = E_p(u) + σ‖A : D²(u★ − u)‖²_{L^{p0}}.
struct EnergyParams {
  double p = 2.0;
  double sigma = 0.0;
  /// Penalty centre u★; required when sigma > 0.
  std::optional<ScalarField> anchor;
  double p0 = 2.0;

  /// σ = 0 with the default penalty exponent p0 = dim + 1.
  static EnergyParams plain(double p, int dim) { return {p, 0.0, std::nullopt, dim + 1.0}; }
  /// Throws std::invalid_argument on p < 2, σ < 0, σ > 0 without anchor,
  /// or p0 ≤ dim.
  void validate(int dim) const;
};

struct EnergyValue {
  double total = 0.0;    // E_p^σ
  double e_p = 0.0;      // mean L^p norm of S over operator nodes
  double a = 0.0;        // ‖A : D²(u − u★)‖_{L^{p0}}, zero without anchor
  double penalty = 0.0;  // σ a²
};

/// Multiplier fields at a (near-)minimiser u_p. f and phi vanish on boundary
/// nodes, which the energies do not aggregate.
struct MultiplierSet {
  ScalarField f;    // e_p^{1−p} |S|^{p−2} S
  double e_p = 0.0;
  double a_p = 0.0;
  ScalarField phi;  // a_p^{2−p0} |T|^{p0−2} T, T = A : D²(u_p − u★)
  double p = 2.0;
  /// e_p = 0: f is identically zero and the normalisation is vacuous.
  bool degenerate = false;
  /// |⨍ |f|^{p/(p−1)} − 1| over operator nodes.
  double normalization_residual = 0.0;
};

EnergyValue evaluate_energy(const ProblemSpec& spec, const ScalarField& u, const EnergyParams& params);

inline double energy_p(const ProblemSpec& spec, const ScalarField& u, const EnergyParams& params) {
  return evaluate_energy(spec, u, params).total;
}

/// Exact gradient of the discrete E_p^σ with respect to the free nodal values
/// (Grid::free_nodes order). Zero E_p contributes a zero gradient.
Vector gradient_energy(const ProblemSpec& spec, const ScalarField& u, const EnergyParams& params);

/// f_p is evaluated in the log domain, sign(S)·exp((p−1)(log|S| − log e_p)),
/// with e_p the discrete E_p of u itself.
MultiplierSet extract_multipliers(const ProblemSpec& spec, const ScalarField& u, const EnergyParams& params);

struct DualityResidual {
  /// |Σ w f S − |Ω| e_p| / (|Ω| e_p); zero when e_p = 0.
  double relative = 0.0;
  /// max |S'_u u − g − S(u)| / (1 + max|S|), with g = −b + u b_y + Du·b_z.
  double nodewise = 0.0;
};

DualityResidual duality_identity_residual(const ProblemSpec& spec, const ScalarField& u,
                                          const MultiplierSet& multipliers);

/// Energy, gradient and the positive semidefinite Gauss–Newton Hessian on the
/// free nodes. The second-derivative term of |S|^p and the rank-one negative
/// part of the p-th root are dropped.
class EnergyModel {
 public:
  EnergyModel(const ProblemSpec& spec, EnergyParams params);

  const EnergyParams& params() const { return params_; }

  struct Evaluation {
    EnergyValue value;
    Vector S;      // all nodes
    Vector T;      // all nodes, zero without anchor
    Vector f;      // multiplier density on operator nodes, zero elsewhere
    Vector phi;    // penalty density on operator nodes, zero elsewhere
    Linearization linearization;
  };

  Evaluation evaluate(const ScalarField& u, bool with_linearization) const;
  EnergyValue value(const ScalarField& u) const;
  Vector gradient(const Evaluation& e) const;
  SparseMatrix gauss_newton_hessian(const Evaluation& e) const;
  /// Free-node gradient divided by the normalised quadrature weight ŵ = w/|Ω_h|,
  /// i.e. the nodal density of the gradient, which is grid independent.
  Vector scaled_gradient(const Vector& gradient) const;

 private:
  const ProblemSpec& spec_;
  EnergyParams params_;
  SparseMatrix principal_;       // A : D², all nodes
  SparseMatrix principal_free_;  // operator rows, free columns
  Vector anchor_principal_;      // A : D² u★, all nodes
};

}  // namespace linfel

#endif  // LINFEL_FUNCTIONAL_HPP_
