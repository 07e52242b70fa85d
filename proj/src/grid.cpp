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

#include "linfel/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "linfel/errors.hpp"

namespace linfel {
namespace {

using Triplet = Eigen::Triplet<double>;

// Second-order first derivative: centered inside, 3-point one-sided at ends.
SparseMatrix first_derivative_1d(int n, double h) {
  std::vector<Triplet> t;
  t.reserve(3 * n);
  const double c = 1.0 / (2.0 * h);
  t.emplace_back(0, 0, -3.0 * c);
  t.emplace_back(0, 1, 4.0 * c);
  t.emplace_back(0, 2, -1.0 * c);
  for (int i = 1; i + 1 < n; ++i) {
    t.emplace_back(i, i - 1, -c);
    t.emplace_back(i, i + 1, c);
  }
  t.emplace_back(n - 1, n - 3, 1.0 * c);
  t.emplace_back(n - 1, n - 2, -4.0 * c);
  t.emplace_back(n - 1, n - 1, 3.0 * c);
  SparseMatrix m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

// Second-order second derivative: 3-point inside, 4-point one-sided at ends.
SparseMatrix second_derivative_1d(int n, double h) {
  std::vector<Triplet> t;
  t.reserve(4 * n);
  const double c = 1.0 / (h * h);
  const double edge[4] = {2.0, -5.0, 4.0, -1.0};
  for (int k = 0; k < 4; ++k) {
    t.emplace_back(0, k, edge[k] * c);
    t.emplace_back(n - 1, n - 1 - k, edge[k] * c);
  }
  for (int i = 1; i + 1 < n; ++i) {
    t.emplace_back(i, i - 1, c);
    t.emplace_back(i, i, -2.0 * c);
    t.emplace_back(i, i + 1, c);
  }
  SparseMatrix m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

SparseMatrix identity(int n) {
  SparseMatrix m(n, n);
  m.setIdentity();
  return m;
}

SparseMatrix kron(const SparseMatrix& a, const SparseMatrix& b) {
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(a.nonZeros()) * b.nonZeros());
  for (int i = 0; i < a.outerSize(); ++i) {
    for (SparseMatrix::InnerIterator ia(a, i); ia; ++ia) {
      for (int k = 0; k < b.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator ib(b, k); ib; ++ib) {
          t.emplace_back(ia.row() * b.rows() + ib.row(), ia.col() * b.cols() + ib.col(),
                         ia.value() * ib.value());
        }
      }
    }
  }
  SparseMatrix m(a.rows() * b.rows(), a.cols() * b.cols());
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

Vector trapezoid_1d(int n, double h) {
  Vector w = Vector::Constant(n, h);
  w[0] = w[n - 1] = 0.5 * h;
  return w;
}

SparseMatrix selection(std::span<const int> nodes, int size) {
  std::vector<Triplet> t;
  t.reserve(nodes.size());
  for (std::size_t r = 0; r < nodes.size(); ++r) t.emplace_back(static_cast<int>(r), nodes[r], 1.0);
  SparseMatrix m(static_cast<int>(nodes.size()), size);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

}  // namespace

std::shared_ptr<const Grid> Grid::create(std::vector<double> extent, std::vector<int> nodes) {
  if (extent.size() != nodes.size() || extent.empty() || extent.size() > 2) {
    throw std::invalid_argument("grid: dimension must be 1 or 2 with one extent per axis");
  }
  for (std::size_t a = 0; a < extent.size(); ++a) {
    if (!(extent[a] > 0.0) || !std::isfinite(extent[a])) {
      throw std::invalid_argument("grid: extent must be positive and finite");
    }
    if (nodes[a] < 5) throw std::invalid_argument("grid: at least 5 nodes per axis are required");
  }
  std::shared_ptr<Grid> g(new Grid());
  g->extent_ = std::move(extent);
  g->nodes_ = std::move(nodes);
  g->build();
  return g;
}

void Grid::build() {
  const int d = dim();
  spacing_.resize(d);
  size_ = 1;
  for (int a = 0; a < d; ++a) {
    spacing_[a] = extent_[a] / (nodes_[a] - 1);
    size_ *= nodes_[a];
  }

  classes_.assign(size_, NodeClass::kInterior);
  for (int k = 0; k < size_; ++k) {
    const auto idx = multi_index(k);
    bool boundary = false, adjacent = false;
    for (int a = 0; a < d; ++a) {
      const int i = idx[a], n = nodes_[a];
      boundary = boundary || i == 0 || i == n - 1;
      adjacent = adjacent || i == 1 || i == n - 2;
    }
    if (boundary) {
      classes_[k] = NodeClass::kBoundary;
      boundary_nodes_.push_back(k);
    } else if (adjacent) {
      classes_[k] = NodeClass::kBoundaryAdjacent;
    } else {
      free_nodes_.push_back(k);
    }
    if (!boundary) operator_nodes_.push_back(k);
  }

  // Every boundary node must see a non-boundary node in its 3^d neighbourhood.
  for (int k : boundary_nodes_) {
    const auto idx = multi_index(k);
    bool found = false;
    for (int dx = -1; dx <= 1 && !found; ++dx) {
      for (int dy = (d == 2 ? -1 : 0); dy <= (d == 2 ? 1 : 0) && !found; ++dy) {
        const int ix = idx[0] + dx, iy = idx[1] + dy;
        if (ix < 0 || ix >= nodes_[0]) continue;
        if (d == 2 && (iy < 0 || iy >= nodes_[1])) continue;
        found = !is_boundary(index(ix, iy));
      }
    }
    if (!found) throw InvariantError("grid: boundary node without interior neighbour");
  }

  const Vector wx = trapezoid_1d(nodes_[0], spacing_[0]);
  const SparseMatrix d1x = first_derivative_1d(nodes_[0], spacing_[0]);
  const SparseMatrix d2x = second_derivative_1d(nodes_[0], spacing_[0]);
  if (d == 1) {
    weights_ = wx;
    d1_[0] = d1x;
    d2_[0] = d2x;
  } else {
    const Vector wy = trapezoid_1d(nodes_[1], spacing_[1]);
    weights_.resize(size_);
    for (int i = 0; i < nodes_[0]; ++i) {
      for (int j = 0; j < nodes_[1]; ++j) weights_[index(i, j)] = wx[i] * wy[j];
    }
    const SparseMatrix d1y = first_derivative_1d(nodes_[1], spacing_[1]);
    const SparseMatrix d2y = second_derivative_1d(nodes_[1], spacing_[1]);
    const SparseMatrix ix = identity(nodes_[0]), iy = identity(nodes_[1]);
    d1_[0] = kron(d1x, iy);
    d1_[1] = kron(ix, d1y);
    d2_[0] = kron(d2x, iy);
    d2_[1] = kron(d1x, d1y);
    d2_[2] = kron(ix, d2y);
  }

  operator_measure_ = 0.0;
  for (int k : operator_nodes_) operator_measure_ += weights_[k];
  select_operator_ = selection(operator_nodes_, size_);
  select_free_ = selection(free_nodes_, size_);
}

double Grid::min_spacing() const { return *std::min_element(spacing_.begin(), spacing_.end()); }

double Grid::volume() const {
  double v = 1.0;
  for (double l : extent_) v *= l;
  return v;
}

std::array<int, 2> Grid::multi_index(int node) const {
  if (dim() == 1) return {node, 0};
  return {node / nodes_[1], node % nodes_[1]};
}

Point Grid::point(int node) const {
  const auto idx = multi_index(node);
  Point x = Point::Zero();
  for (int a = 0; a < dim(); ++a) {
    // The last node sits exactly on the far face.
    x[a] = idx[a] == nodes_[a] - 1 ? extent_[a] : idx[a] * spacing_[a];
  }
  return x;
}

Point Grid::outward_normal(int node) const {
  const auto idx = multi_index(node);
  Point nu = Point::Zero();
  for (int a = 0; a < dim(); ++a) {
    if (idx[a] == 0) nu[a] -= 1.0;
    if (idx[a] == nodes_[a] - 1) nu[a] += 1.0;
  }
  const double len = nu.norm();
  return len > 0.0 ? Point(nu / len) : nu;
}

const SparseMatrix& Grid::second_derivative(int a, int b) const {
  if (a > b) std::swap(a, b);
  if (dim() == 1 || (a == 0 && b == 0)) return d2_[0];
  return a == 0 ? d2_[1] : d2_[2];
}

ScalarField::ScalarField(GridPtr grid) : grid_(std::move(grid)), values_(Vector::Zero(grid_->size())) {}

ScalarField::ScalarField(GridPtr grid, Vector values) : grid_(std::move(grid)), values_(std::move(values)) {
  if (!grid_) throw std::invalid_argument("field: null grid");
  if (values_.size() != grid_->size()) {
    throw std::invalid_argument("field: expected " + std::to_string(grid_->size()) + " values, got " +
                                std::to_string(values_.size()));
  }
  if (!values_.allFinite()) throw std::invalid_argument("field: values must be finite");
}

VectorField gradient(const ScalarField& field) {
  const Grid& g = *field.grid();
  VectorField out{field.grid(), {}};
  for (int a = 0; a < g.dim(); ++a) out.component[a] = g.first_derivative(a) * field.values();
  return out;
}

SymmetricMatrixField hessian(const ScalarField& field) {
  const Grid& g = *field.grid();
  SymmetricMatrixField out{field.grid(), {}, {}, {}};
  out.xx = g.second_derivative(0, 0) * field.values();
  if (g.dim() == 2) {
    out.xy = g.second_derivative(0, 1) * field.values();
    out.yy = g.second_derivative(1, 1) * field.values();
  }
  return out;
}

double mean_integral(const ScalarField& field, double p) {
  const Grid& g = *field.grid();
  const Vector& v = field.values();
  const Vector& w = g.weights();
  const double m = v.cwiseAbs().maxCoeff();
  if (m == 0.0) return 0.0;
  double sum = 0.0;
  for (int k = 0; k < v.size(); ++k) sum += w[k] * std::pow(std::abs(v[k]) / m, p);
  return m * std::pow(sum / g.volume(), 1.0 / p);
}

double mean_integral(const Vector& values, const Vector& weights, std::span<const int> nodes, double p) {
  double m = 0.0, measure = 0.0;
  for (int k : nodes) {
    m = std::max(m, std::abs(values[k]));
    measure += weights[k];
  }
  if (m == 0.0) return 0.0;
  double sum = 0.0;
  for (int k : nodes) sum += weights[k] * std::pow(std::abs(values[k]) / m, p);
  return m * std::pow(sum / measure, 1.0 / p);
}

}  // namespace linfel
