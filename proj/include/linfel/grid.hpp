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

#ifndef LINFEL_GRID_HPP_
#define LINFEL_GRID_HPP_

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace linfel {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
/// A point of the box. In one dimension the second coordinate is zero.
using Point = Eigen::Vector2d;

enum class NodeClass : std::uint8_t {
  kInterior,          // free: neither on the boundary nor next to it
  kBoundaryAdjacent,  // first layer inside the boundary, clamped
  kBoundary,          // on the boundary, clamped
};

/// Tensor-product node lattice on the box Π (0, Lᵢ), dimension 1 or 2.
///
/// Nodes are numbered in row-major order of the index tuple (i_x, i_y), so the
/// last axis runs fastest. Differentiation matrices are second-order finite
/// differences, centered in the interior and one-sided on the boundary, built
/// once at construction as Kronecker products of the 1-D stencils.
class Grid {
 public:
  /// Throws std::invalid_argument unless dim ∈ {1, 2}, every extent is
  /// positive and every axis has at least 5 nodes.
  static std::shared_ptr<const Grid> create(std::vector<double> extent,
                                            std::vector<int> nodes);

  int dim() const { return static_cast<int>(extent_.size()); }
  int size() const { return size_; }
  double extent(int axis) const { return extent_[axis]; }
  int nodes(int axis) const { return nodes_[axis]; }
  double spacing(int axis) const { return spacing_[axis]; }
  double min_spacing() const;
  /// |Ω| = Π Lᵢ.
  double volume() const;

  int index(int ix, int iy = 0) const { return dim() == 1 ? ix : ix * nodes_[1] + iy; }
  std::array<int, 2> multi_index(int node) const;
  Point point(int node) const;

  NodeClass node_class(int node) const { return classes_[node]; }
  bool is_boundary(int node) const { return classes_[node] == NodeClass::kBoundary; }
  bool is_free(int node) const { return classes_[node] == NodeClass::kInterior; }
  /// Outward unit normal at a boundary node (averaged at corners).
  Point outward_normal(int node) const;

  /// Trapezoid tensor weights; they sum to volume().
  const Vector& weights() const { return weights_; }

  /// Nodes where the operator is aggregated: everything off the boundary.
  std::span<const int> operator_nodes() const { return operator_nodes_; }
  /// Unknowns of the clamped problem: interior-class nodes.
  std::span<const int> free_nodes() const { return free_nodes_; }
  std::span<const int> boundary_nodes() const { return boundary_nodes_; }
  /// Σ of weights over operator nodes, the measure used by mean energies.
  double operator_measure() const { return operator_measure_; }

  /// d/dx_axis, all nodes to all nodes.
  const SparseMatrix& first_derivative(int axis) const { return d1_[axis]; }
  /// d²/dx_a dx_b; the mixed one is the composition of the first derivatives.
  const SparseMatrix& second_derivative(int a, int b) const;

  /// Selection matrices mapping full nodal vectors to a node subset.
  const SparseMatrix& select_operator() const { return select_operator_; }
  const SparseMatrix& select_free() const { return select_free_; }

 private:
  Grid() = default;
  void build();

  std::vector<double> extent_;
  std::vector<int> nodes_;
  std::vector<double> spacing_;
  int size_ = 0;
  std::vector<NodeClass> classes_;
  Vector weights_;
  std::vector<int> operator_nodes_;
  std::vector<int> free_nodes_;
  std::vector<int> boundary_nodes_;
  double operator_measure_ = 0.0;
  std::array<SparseMatrix, 2> d1_;
  std::array<SparseMatrix, 3> d2_;  // xx, xy, yy
  SparseMatrix select_operator_;
  SparseMatrix select_free_;
};

using GridPtr = std::shared_ptr<const Grid>;

/// One finite value per grid node.
class ScalarField {
 public:
  ScalarField() = default;
  /// Zero field.
  explicit ScalarField(GridPtr grid);
  /// Throws std::invalid_argument on a size mismatch or a non-finite value.
  ScalarField(GridPtr grid, Vector values);

  const GridPtr& grid() const { return grid_; }
  const Vector& values() const { return values_; }
  Vector& mutable_values() { return values_; }
  double operator[](int node) const { return values_[node]; }
  int size() const { return static_cast<int>(values_.size()); }

 private:
  GridPtr grid_;
  Vector values_;
};

/// Gradient per node; component k is ∂u/∂x_k. Unused components stay empty.
struct VectorField {
  GridPtr grid;
  std::array<Vector, 2> component;
};

/// Symmetric Hessian per node.
struct SymmetricMatrixField {
  GridPtr grid;
  Vector xx, xy, yy;  // xy, yy are zero-length in 1-D
};

VectorField gradient(const ScalarField& field);
SymmetricMatrixField hessian(const ScalarField& field);

/// (Σ wᵢ |vᵢ|^p / |Ω|)^{1/p}, evaluated as m·(Σ (wᵢ/|Ω|)(|vᵢ|/m)^p)^{1/p}
/// with m = max|v| so large exponents cannot overflow.
double mean_integral(const ScalarField& field, double p);

/// Same, restricted to a node subset with weights renormalised by the subset
/// measure. Used for energies aggregated over operator nodes.
double mean_integral(const Vector& values, const Vector& weights,
                     std::span<const int> nodes, double p);

}  // namespace linfel

#endif  // LINFEL_GRID_HPP_
