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

#include "linfel/problem.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "linfel/errors.hpp"
#include "linfel/random.hpp"

namespace linfel {
namespace {

constexpr std::uint64_t kPartialCheckSeed = 0x5eedc0ffeeull;

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

// ---------------------------------------------------------------------------
// CoefficientField

CoefficientField CoefficientField::create(GridPtr grid, Function a, std::string name) {
  CoefficientField c;
  const int n = grid->size();
  c.a11_.resize(n);
  c.a12_.resize(n);
  c.a22_.resize(n);
  c.name_ = std::move(name);
  const int d = grid->dim();
  double lambda = std::numeric_limits<double>::infinity();
  for (int k = 0; k < n; ++k) {
    const Matrix2 m = a(grid->point(k));
    if (!m.allFinite()) throw std::invalid_argument("coefficients: A(x) is not finite");
    if (d == 2 && std::abs(m(0, 1) - m(1, 0)) > 1e-14 * (1.0 + m.cwiseAbs().maxCoeff())) {
      throw std::invalid_argument("coefficients: A(x) is not symmetric");
    }
    c.a11_[k] = m(0, 0);
    c.a12_[k] = d == 2 ? 0.5 * (m(0, 1) + m(1, 0)) : 0.0;
    c.a22_[k] = d == 2 ? m(1, 1) : 0.0;
    if (d == 1) {
      lambda = std::min(lambda, c.a11_[k]);
      continue;
    }
    // Axis and diagonal directions, then the exact smallest eigenvalue.
    const Vector2 dirs[4] = {{1, 0}, {0, 1}, {M_SQRT1_2, M_SQRT1_2}, {M_SQRT1_2, -M_SQRT1_2}};
    const Matrix2 sym{{c.a11_[k], c.a12_[k]}, {c.a12_[k], c.a22_[k]}};
    for (const Vector2& z : dirs) lambda = std::min(lambda, z.dot(sym * z));
    const double mean = 0.5 * (c.a11_[k] + c.a22_[k]);
    const double radius = std::hypot(0.5 * (c.a11_[k] - c.a22_[k]), c.a12_[k]);
    lambda = std::min(lambda, mean - radius);
  }
  if (!(lambda > 0.0)) throw std::invalid_argument("coefficients: A is not uniformly elliptic");
  c.lambda_ = lambda;
  c.grid_ = std::move(grid);
  return c;
}

CoefficientField CoefficientField::identity(GridPtr grid) {
  CoefficientField c = create(std::move(grid), [](const Point&) { return Matrix2::Identity(); }, "identity");
  c.identity_ = true;
  return c;
}

CoefficientField CoefficientField::constant(GridPtr grid, const Matrix2& a) {
  return create(std::move(grid), [a](const Point&) { return a; }, "constant");
}

CoefficientField CoefficientField::affine(GridPtr grid, const Matrix2& a0, const Matrix2& ax, const Matrix2& ay) {
  return create(
      std::move(grid), [=](const Point& x) -> Matrix2 { return a0 + x[0] * ax + x[1] * ay; }, "affine");
}

Matrix2 CoefficientField::at(int node) const {
  return Matrix2{{a11_[node], a12_[node]}, {a12_[node], a22_[node]}};
}

// ---------------------------------------------------------------------------
// ReactionFamily

ReactionFamily ReactionFamily::zero() {
  ReactionFamily r;
  r.f_ = [](const Point&, double, const Vector2&) { return ReactionValue{}; };
  r.kind_ = ReactionKind::kZero;
  r.name_ = "zero";
  return r;
}

ReactionFamily ReactionFamily::linear(double c0, double cy, const Vector2& cz) {
  ReactionFamily r;
  r.f_ = [=](const Point&, double y, const Vector2& z) {
    ReactionValue v;
    v.b = c0 + cy * y + cz.dot(z);
    v.b_y = cy;
    v.b_z = cz;
    return v;
  };
  r.kind_ = ReactionKind::kLinear;
  r.name_ = "linear";
  r.parameters_ = {c0, cy, cz[0], cz[1]};
  return r;
}

ReactionFamily ReactionFamily::scalar(std::string name, std::function<double(double)> g,
                                      std::function<double(double)> dg, std::function<double(double)> d2g,
                                      std::function<double(double)> antiderivative) {
  ReactionFamily r;
  r.f_ = [g, dg, d2g](const Point&, double y, const Vector2&) {
    ReactionValue v;
    v.b = g(y);
    v.b_y = dg(y);
    v.b_yy = d2g(y);
    return v;
  };
  r.kind_ = ReactionKind::kGOfU;
  r.name_ = std::move(name);
  r.scalar_ = ScalarReaction{std::move(g), std::move(antiderivative)};
  return r;
}

ReactionFamily ReactionFamily::cubic() {
  return scalar(
      "cubic", [](double y) { return -y * y * y; }, [](double y) { return -3.0 * y * y; },
      [](double y) { return -6.0 * y; }, [](double y) { return -0.25 * y * y * y * y; });
}

ReactionFamily ReactionFamily::power(double alpha, double coeff) {
  if (!(alpha == 2.0 || alpha > 3.0)) {
    throw std::invalid_argument("reaction power: alpha must be 2 or greater than 3 for a C² nonlinearity");
  }
  auto r = scalar(
      "power", [=](double y) { return coeff * y * std::pow(std::abs(y), alpha - 2.0); },
      [=](double y) { return coeff * (alpha - 1.0) * std::pow(std::abs(y), alpha - 2.0); },
      [=](double y) {
        if (alpha == 2.0) return 0.0;
        return coeff * (alpha - 1.0) * (alpha - 2.0) * sign(y) * std::pow(std::abs(y), alpha - 3.0);
      },
      [=](double y) { return coeff * std::pow(std::abs(y), alpha) / alpha; });
  r.parameters_ = {alpha, coeff};
  return r;
}

ReactionFamily ReactionFamily::sine(double coeff) {
  auto r = scalar(
      "sine", [=](double y) { return coeff * std::sin(y); }, [=](double y) { return coeff * std::cos(y); },
      [=](double y) { return -coeff * std::sin(y); }, [=](double y) { return coeff * (1.0 - std::cos(y)); });
  r.parameters_ = {coeff};
  return r;
}

ReactionFamily ReactionFamily::polynomial(std::vector<double> coeffs) {
  auto eval = [](const std::vector<double>& c, double y) {
    double acc = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * y + *it;
    return acc;
  };
  std::vector<double> d1, d2, anti{0.0};
  for (std::size_t k = 1; k < coeffs.size(); ++k) d1.push_back(k * coeffs[k]);
  for (std::size_t k = 1; k < d1.size(); ++k) d2.push_back(k * d1[k]);
  for (std::size_t k = 0; k < coeffs.size(); ++k) anti.push_back(coeffs[k] / (k + 1.0));
  auto r = scalar(
      "polynomial", [=](double y) { return eval(coeffs, y); }, [=](double y) { return eval(d1, y); },
      [=](double y) { return eval(d2, y); }, [=](double y) { return eval(anti, y); });
  r.parameters_ = coeffs;
  return r;
}

ReactionFamily ReactionFamily::custom(std::string name, Function f) {
  ReactionFamily r;
  r.f_ = std::move(f);
  r.kind_ = ReactionKind::kCustom;
  r.name_ = std::move(name);
  return r;
}

void ReactionFamily::check_partials(int dim, std::uint64_t seed, int samples) const {
  Rng rng(seed);
  constexpr double kStep = 1e-5;
  auto fail = [&](const char* which, double analytic, double fd, double y) {
    std::ostringstream msg;
    msg << "reaction '" << name_ << "': partial " << which << " = " << analytic
        << " disagrees with centered difference " << fd << " at y = " << y;
    throw InvariantError(msg.str());
  };
  auto check = [&](const char* which, double analytic, double fd, double y) {
    if (!(std::abs(analytic - fd) <= 1e-6 * (1.0 + std::abs(analytic)))) fail(which, analytic, fd, y);
  };
  for (int s = 0; s < samples; ++s) {
    const Point x(rng.uniform(), rng.uniform());
    const double y = rng.uniform(-2.0, 2.0);
    Vector2 z(rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0));
    if (dim == 1) z[1] = 0.0;
    const ReactionValue v = f_(x, y, z);
    const ReactionValue yp = f_(x, y + kStep, z), ym = f_(x, y - kStep, z);
    const double h2 = 2.0 * kStep;
    check("b_y", v.b_y, (yp.b - ym.b) / h2, y);
    check("b_yy", v.b_yy, (yp.b_y - ym.b_y) / h2, y);
    for (int k = 0; k < dim; ++k) {
      Vector2 zp = z, zm = z;
      zp[k] += kStep;
      zm[k] -= kStep;
      const ReactionValue kp = f_(x, y, zp), km = f_(x, y, zm);
      check("b_z", v.b_z[k], (kp.b - km.b) / h2, y);
      check("b_yz", v.b_yz[k], (yp.b_z[k] - ym.b_z[k]) / h2, y);
      check("b_yz", v.b_yz[k], (kp.b_y - km.b_y) / h2, y);
      for (int l = 0; l < dim; ++l) check("b_zz", v.b_zz(l, k), (kp.b_z[l] - km.b_z[l]) / h2, y);
    }
  }
}

// ---------------------------------------------------------------------------
// BoundaryData

BoundaryData BoundaryData::from_function(GridPtr grid, const std::function<double(const Point&)>& value,
                                         const std::function<Vector2(const Point&)>& grad, std::string name) {
  Vector u(grid->size());
  for (int k = 0; k < grid->size(); ++k) u[k] = value(grid->point(k));
  const auto nodes = grid->boundary_nodes();
  BoundaryData b{ScalarField(grid, std::move(u)), Vector(nodes.size()), Vector(nodes.size()), std::move(name)};
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Point x = grid->point(nodes[i]);
    b.trace[i] = value(x);
    b.normal[i] = grid->outward_normal(nodes[i]).dot(grad(x));
  }
  return b;
}

BoundaryData BoundaryData::from_nodal(const ScalarField& u0, std::string name) {
  const GridPtr& grid = u0.grid();
  const VectorField du = gradient(u0);
  const auto nodes = grid->boundary_nodes();
  BoundaryData b{u0, Vector(nodes.size()), Vector(nodes.size()), std::move(name)};
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const int k = nodes[i];
    const Point nu = grid->outward_normal(k);
    b.trace[i] = u0[k];
    b.normal[i] = 0.0;
    for (int a = 0; a < grid->dim(); ++a) b.normal[i] += nu[a] * du.component[a][k];
  }
  return b;
}

BoundaryData BoundaryData::hermite_1d(GridPtr grid, double a, double b) {
  if (grid->dim() != 1) throw std::invalid_argument("hermite boundary data is one-dimensional");
  const double len = grid->extent(0);
  auto value = [=](const Point& x) {
    const double t = x[0] / len;
    return a * (3 * t * t - 2 * t * t * t) + b * len * (t * t * t - t * t);
  };
  auto grad = [=](const Point& x) {
    const double t = x[0] / len;
    return Vector2(a * (6 * t - 6 * t * t) / len + b * (3 * t * t - 2 * t), 0.0);
  };
  return from_function(std::move(grid), value, grad, "hermite");
}

// ---------------------------------------------------------------------------
// ProblemSpec

ProblemSpec ProblemSpec::create(CoefficientField a, ReactionFamily b, BoundaryData boundary) {
  const GridPtr& grid = boundary.u0.grid();
  if (!grid || a.grid() != grid) throw std::invalid_argument("problem: components must share one grid");
  if (boundary.trace.size() != static_cast<Eigen::Index>(grid->boundary_nodes().size()) ||
      boundary.normal.size() != boundary.trace.size()) {
    throw std::invalid_argument("problem: boundary tables do not match the grid");
  }
  b.check_partials(grid->dim(), kPartialCheckSeed);
  ProblemSpec spec;
  spec.grid_ = grid;
  spec.a_ = std::move(a);
  spec.b_ = std::move(b);
  spec.boundary_ = std::move(boundary);
  return spec;
}

ScalarField ProblemSpec::clamp(const ScalarField& u) const {
  Vector v = u.values();
  for (int k = 0; k < grid_->size(); ++k) {
    if (!grid_->is_free(k)) v[k] = boundary_.u0[k];
  }
  return ScalarField(grid_, std::move(v));
}

ScalarField ProblemSpec::with_free_values(const Vector& free_values) const {
  Vector v = boundary_.u0.values();
  const auto free = grid_->free_nodes();
  for (std::size_t i = 0; i < free.size(); ++i) v[free[i]] = free_values[i];
  return ScalarField(grid_, std::move(v));
}

Vector ProblemSpec::free_values(const ScalarField& u) const {
  const auto free = grid_->free_nodes();
  Vector v(free.size());
  for (std::size_t i = 0; i < free.size(); ++i) v[i] = u[free[i]];
  return v;
}

// ---------------------------------------------------------------------------
// Operators

ReactionSamples sample_reaction(const ProblemSpec& spec, const ScalarField& u) {
  const Grid& g = *spec.grid();
  const VectorField du = gradient(u);
  const int n = g.size();
  ReactionSamples s{Vector(n), Vector(n), {Vector::Zero(n), Vector::Zero(n)}};
  for (int k = 0; k < n; ++k) {
    Vector2 z = Vector2::Zero();
    for (int a = 0; a < g.dim(); ++a) z[a] = du.component[a][k];
    const ReactionValue v = spec.reaction()(g.point(k), u[k], z);
    if (!std::isfinite(v.b) || !std::isfinite(v.b_y) || !v.b_z.allFinite()) {
      throw DomainError("reaction '" + spec.reaction().name() + "' is not finite at node " + std::to_string(k), k);
    }
    s.b[k] = v.b;
    s.b_y[k] = v.b_y;
    s.b_z[0][k] = v.b_z[0];
    s.b_z[1][k] = v.b_z[1];
  }
  return s;
}

ScalarField eval_S(const ProblemSpec& spec, const ScalarField& u) {
  const CoefficientField& a = spec.coefficients();
  const SymmetricMatrixField d2 = hessian(u);
  const ReactionSamples r = sample_reaction(spec, u);
  Vector s = a.a11().cwiseProduct(d2.xx) + r.b;
  if (spec.grid()->dim() == 2) s += 2.0 * a.a12().cwiseProduct(d2.xy) + a.a22().cwiseProduct(d2.yy);
  return ScalarField(spec.grid(), std::move(s));
}

SparseMatrix principal_part(const ProblemSpec& spec) {
  const Grid& g = *spec.grid();
  const CoefficientField& a = spec.coefficients();
  SparseMatrix k = a.a11().asDiagonal() * g.second_derivative(0, 0);
  if (g.dim() == 2) {
    k += (2.0 * a.a12()).asDiagonal() * g.second_derivative(0, 1);
    k += a.a22().asDiagonal() * g.second_derivative(1, 1);
  }
  k.prune(0.0);
  return k;
}

Linearization assemble_linearization(const ProblemSpec& spec, const ScalarField& u) {
  const Grid& g = *spec.grid();
  const ReactionSamples r = sample_reaction(spec, u);
  SparseMatrix full = principal_part(spec);
  for (int a = 0; a < g.dim(); ++a) full += r.b_z[a].asDiagonal() * g.first_derivative(a);
  SparseMatrix eye(g.size(), g.size());
  eye.setIdentity();
  full += r.b_y.asDiagonal() * eye;
  full.prune(0.0);
  SparseMatrix jac = g.select_operator() * full * g.select_free().transpose();
  return {std::move(full), std::move(jac)};
}

Vector apply_adjoint(const Grid& grid, const SparseMatrix& full, const Vector& f) {
  const Vector& w = grid.weights();
  Vector t = Vector::Zero(grid.size());
  for (int k : grid.operator_nodes()) t[k] = w[k] * f[k];
  Vector out = full.transpose() * t;
  return out.cwiseQuotient(w);
}

ScalarField apply_adjoint(const ProblemSpec& spec, const ScalarField& u, const ScalarField& f) {
  const Linearization lin = assemble_linearization(spec, u);
  return ScalarField(spec.grid(), apply_adjoint(*spec.grid(), lin.full, f.values()));
}

TaylorBound taylor_remainder_bound(const ProblemSpec& spec, const ScalarField& u, double radius,
                                   int points_per_axis) {
  if (!(radius > 0.0)) throw std::invalid_argument("taylor bound: radius must be positive");
  if (points_per_axis < 2) throw std::invalid_argument("taylor bound: at least 2 points per axis");
  const Grid& g = *spec.grid();
  const int d = g.dim();
  const VectorField du = gradient(u);
  const int m = points_per_axis;
  int lattice = 1;
  for (int k = 0; k <= d; ++k) lattice *= m;
  auto offset = [&](int i) { return -radius + 2.0 * radius * i / (m - 1); };
  double worst = 0.0;
  for (int node = 0; node < g.size(); ++node) {
    const Point x = g.point(node);
    for (int l = 0; l < lattice; ++l) {
      int code = l;
      const double y = u[node] + offset(code % m);
      code /= m;
      Vector2 z = Vector2::Zero();
      for (int a = 0; a < d; ++a) {
        z[a] = du.component[a][node] + offset(code % m);
        code /= m;
      }
      const ReactionValue v = spec.reaction()(x, y, z);
      double value = std::abs(v.b_yy);
      for (int a = 0; a < d; ++a) {
        value += 2.0 * std::abs(v.b_yz[a]);
        for (int c = 0; c < d; ++c) value += std::abs(v.b_zz(a, c));
      }
      worst = std::max(worst, value);
    }
  }
  return {0.5 * worst, radius, m, lattice};
}

// ---------------------------------------------------------------------------
// Admissibility

double antiderivative(const std::function<double(double)>& g, double y) {
  if (y == 0.0) return 0.0;
  using boost::math::quadrature::gauss_kronrod;
  return gauss_kronrod<double, 31>::integrate(g, 0.0, y, 20, 1e-15);
}

AdmissibilityReport admissibility_probe(const ScalarReaction& g, double range, int n,
                                        std::optional<double> alpha_target) {
  if (!(range > 0.0)) throw std::invalid_argument("admissibility probe: range must be positive");
  AdmissibilityReport rep;
  auto big_g = [&](double y) { return g.antiderivative ? g.antiderivative(y) : antiderivative(g.g, y); };

  constexpr int kSignSamples = 2001;
  rep.sign_condition = true;
  for (int i = 0; i < kSignSamples; ++i) {
    const double y = -range + 2.0 * range * i / (kSignSamples - 1);
    if (y * g.g(y) > 0.0) rep.sign_condition = false;
  }

  constexpr double kProbe[] = {10.0, 20.0, 40.0, 80.0, 160.0};
  for (double sgn : {1.0, -1.0}) {
    for (double m : kProbe) {
      const double y = sgn * m;
      const double num = y * g.g(y);
      const double den = big_g(y);
      double alpha;
      if (std::abs(den) <= 1e-300 || !std::isfinite(den)) {
        alpha = num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
      } else {
        alpha = num / den;
      }
      rep.alpha_samples.push_back({y, alpha});
    }
  }
  const auto& s = rep.alpha_samples;
  const std::size_t half = s.size() / 2;
  auto close = [](double a, double b) {
    return std::isfinite(a) && std::isfinite(b) && std::abs(a - b) <= 1e-2 * std::max(1.0, std::abs(a));
  };
  const double plus = s[half - 1].alpha, minus = s.back().alpha;
  rep.alpha_stable = close(plus, s[half - 2].alpha) && close(minus, s[s.size() - 2].alpha) && close(plus, minus);
  if (rep.alpha_stable) rep.alpha_estimate = 0.5 * (plus + minus);

  rep.critical_exponent = n >= 3 ? 2.0 * n / (n - 2.0) : std::numeric_limits<double>::infinity();
  rep.subcritical = rep.alpha_stable && rep.alpha_estimate >= 2.0 - 1e-2 && rep.alpha_estimate < rep.critical_exponent;
  if (alpha_target) rep.matches_target = rep.alpha_stable && close(*alpha_target, rep.alpha_estimate);

  if (rep.subcritical) {
    rep.beta = std::isfinite(rep.critical_exponent) ? 0.5 * (rep.alpha_estimate + rep.critical_exponent)
                                                    : rep.alpha_estimate + 1.0;
    double c = 0.0;
    constexpr int kGrowthSamples = 4001;
    for (int i = 0; i < kGrowthSamples; ++i) {
      const double y = -kProbe[4] + 2.0 * kProbe[4] * i / (kGrowthSamples - 1);
      c = std::max(c, std::abs(g.g(y)) / (std::pow(std::abs(y), rep.beta - 1.0) + 1.0));
    }
    rep.growth_constant = c;
  }
  return rep;
}

}  // namespace linfel
