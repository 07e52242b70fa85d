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

#ifndef LINFEL_PROBLEM_HPP_
#define LINFEL_PROBLEM_HPP_

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "linfel/grid.hpp"

namespace linfel {

using Matrix2 = Eigen::Matrix2d;
using Vector2 = Eigen::Vector2d;

/// Symmetric, uniformly elliptic A(x), evaluated once per node.
class CoefficientField {
 public:
  using Function = std::function<Matrix2(const Point&)>;

  CoefficientField() = default;
  /// Throws std::invalid_argument if A is not symmetric or fails
  /// ζᵀAζ ≥ λ|ζ|² (λ > 0) along the axis and diagonal directions.
  static CoefficientField create(GridPtr grid, Function a, std::string name = "custom");
  static CoefficientField identity(GridPtr grid);
  static CoefficientField constant(GridPtr grid, const Matrix2& a);
  /// A(x) = A0 + x·Ax + y·Ay.
  static CoefficientField affine(GridPtr grid, const Matrix2& a0, const Matrix2& ax, const Matrix2& ay);

  Matrix2 at(int node) const;
  const GridPtr& grid() const { return grid_; }
  const Vector& a11() const { return a11_; }
  const Vector& a12() const { return a12_; }
  const Vector& a22() const { return a22_; }
  double lambda() const { return lambda_; }
  const std::string& name() const { return name_; }
  bool is_identity() const { return identity_; }

 private:
  GridPtr grid_;
  Vector a11_, a12_, a22_;
  double lambda_ = 0.0;
  std::string name_;
  bool identity_ = false;
};

/// b and the partials that enter S'_u and the Taylor remainder.
struct ReactionValue {
  double b = 0.0;
  double b_y = 0.0;
  Vector2 b_z = Vector2::Zero();
  double b_yy = 0.0;
  Vector2 b_yz = Vector2::Zero();
  Matrix2 b_zz = Matrix2::Zero();
};

/// g and g' of a reaction b(x, y, z) = g(y); `antiderivative` is G(y) = ∫₀^y g
/// when a closed form is known, empty otherwise.
struct ScalarReaction {
  std::function<double(double)> g;
  std::function<double(double)> antiderivative;
};

enum class ReactionKind { kZero, kLinear, kGOfU, kCustom };

class ReactionFamily {
 public:
  using Function = std::function<ReactionValue(const Point& x, double y, const Vector2& z)>;

  static ReactionFamily zero();
  /// b = c0 + cy·y + cz·z.
  static ReactionFamily linear(double c0, double cy, const Vector2& cz);
  /// b = −y³.
  static ReactionFamily cubic();
  /// b = c·y|y|^{α−2}; α = 2 or α > 3 so that b is C².
  static ReactionFamily power(double alpha, double coeff = 1.0);
  /// b = c·sin y.
  static ReactionFamily sine(double coeff = 1.0);
  /// b = Σ cₖ yᵏ.
  static ReactionFamily polynomial(std::vector<double> coeffs);
  /// b = g(y) from a scalar function and its first two derivatives.
  static ReactionFamily scalar(std::string name, std::function<double(double)> g,
                               std::function<double(double)> dg, std::function<double(double)> d2g,
                               std::function<double(double)> antiderivative = {});
  static ReactionFamily custom(std::string name, Function f);

  ReactionValue operator()(const Point& x, double y, const Vector2& z) const { return f_(x, y, z); }
  ReactionKind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  const std::vector<double>& parameters() const { return parameters_; }
  /// Present for the g-of-u catalogue entries.
  const std::optional<ScalarReaction>& scalar_form() const { return scalar_; }

  /// Compares every listed partial with centered differences at `samples`
  /// random (x, y, z); throws InvariantError on a mismatch beyond
  /// 1e-6·(1 + |partial|).
  void check_partials(int dim, std::uint64_t seed, int samples = 100) const;

 private:
  Function f_;
  ReactionKind kind_ = ReactionKind::kZero;
  std::string name_;
  std::vector<double> parameters_;
  std::optional<ScalarReaction> scalar_;
};

/// Clamped boundary data: the extension u0 and its trace and outward normal
/// derivative on the boundary nodes (in Grid::boundary_nodes order).
struct BoundaryData {
  ScalarField u0;
  Vector trace;
  Vector normal;
  std::string name;

  static BoundaryData from_function(GridPtr grid, const std::function<double(const Point&)>& value,
                                    const std::function<Vector2(const Point&)>& grad,
                                    std::string name = "function");
  /// Trace and normal derivative come from the field's own one-sided stencils.
  static BoundaryData from_nodal(const ScalarField& u0, std::string name = "nodal");
  /// u0 = a(3t² − 2t³) + b·L(t³ − t²), t = x/L: u0(0) = u0'(0) = 0, u0(L) = a, u0'(L) = b.
  static BoundaryData hermite_1d(GridPtr grid, double a, double b);
};

class ProblemSpec {
 public:
  /// Throws std::invalid_argument if the components live on different grids,
  /// InvariantError if the reaction partials are inconsistent.
  static ProblemSpec create(CoefficientField a, ReactionFamily b, BoundaryData boundary);

  const GridPtr& grid() const { return grid_; }
  const CoefficientField& coefficients() const { return a_; }
  const ReactionFamily& reaction() const { return b_; }
  const BoundaryData& boundary() const { return boundary_; }

  /// Copies u0 onto the boundary and boundary-adjacent layers.
  ScalarField clamp(const ScalarField& u) const;
  /// Builds a clamped field from free-node values.
  ScalarField with_free_values(const Vector& free_values) const;
  Vector free_values(const ScalarField& u) const;

 private:
  GridPtr grid_;
  CoefficientField a_;
  ReactionFamily b_;
  BoundaryData boundary_;
};

/// Nodewise b-partials at (x, u, Du), all nodes.
struct ReactionSamples {
  Vector b, b_y;
  std::array<Vector, 2> b_z;
};

/// S(u) = A : D²u + b(x, u, Du) at every node. Throws DomainError naming the
/// first node where b is not finite.
ScalarField eval_S(const ProblemSpec& spec, const ScalarField& u);
ReactionSamples sample_reaction(const ProblemSpec& spec, const ScalarField& u);

/// A : D² as an all-nodes sparse matrix.
SparseMatrix principal_part(const ProblemSpec& spec);

struct Linearization {
  /// S'_u on all nodes: A : D² + b_z·D + b_y.
  SparseMatrix full;
  /// Rows: operator nodes; columns: free nodes. The Jacobian of the residual
  /// the energies aggregate.
  SparseMatrix jacobian;
};

Linearization assemble_linearization(const ProblemSpec& spec, const ScalarField& u);

/// W⁻¹ L_uᵀ W f with rows restricted to operator nodes, so that
/// Σ w (apply_adjoint f) φ = Σ_{operator} w f (L_u φ) for every φ.
ScalarField apply_adjoint(const ProblemSpec& spec, const ScalarField& u, const ScalarField& f);
/// Same, for an already assembled linearisation.
Vector apply_adjoint(const Grid& grid, const SparseMatrix& full, const Vector& f);

struct TaylorBound {
  double c2 = 0.0;
  double radius = 0.0;
  int points_per_axis = 3;
  int lattice_points_per_node = 0;
};

/// C₂ = ½ sup (|b_yy| + 2|b_yz|₁ + Σ|b_zz|) over the (y, z) box of half-width r
/// around (u, Du), sampled on a lattice with `points_per_axis` points per
/// variable. The norms match ‖φ‖_{W^{1,∞}} = max(‖φ‖∞, maxₖ‖∂ₖφ‖∞).
TaylorBound taylor_remainder_bound(const ProblemSpec& spec, const ScalarField& u, double radius,
                                   int points_per_axis = 3);

struct AdmissibilityReport {
  bool sign_condition = false;  // y g(y) ≤ 0 on every sampled y
  struct AlphaSample {
    double y;
    double alpha;  // +inf when ∫₀^y g vanishes while y g(y) does not
  };
  std::vector<AlphaSample> alpha_samples;
  bool alpha_stable = false;
  double alpha_estimate = std::numeric_limits<double>::quiet_NaN();
  double critical_exponent = std::numeric_limits<double>::infinity();  // 2n/(n−2), ∞ for n ≤ 2
  bool subcritical = false;
  bool matches_target = false;
  double beta = std::numeric_limits<double>::quiet_NaN();
  double growth_constant = std::numeric_limits<double>::quiet_NaN();
};

/// G(y) = ∫₀^y g by adaptive Gauss–Kronrod quadrature.
double antiderivative(const std::function<double(double)>& g, double y);

/// Advisory check of the sign and growth conditions for S = Δu + g(u) in
/// dimension n. `range` bounds the sign-condition sample.
AdmissibilityReport admissibility_probe(const ScalarReaction& g, double range, int n,
                                        std::optional<double> alpha_target = std::nullopt);

}  // namespace linfel

#endif  // LINFEL_PROBLEM_HPP_
