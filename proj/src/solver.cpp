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

#include "linfel/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "linfel/errors.hpp"

namespace linfel {
namespace {

using ColMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

constexpr double kEps = std::numeric_limits<double>::epsilon();

double inf_norm(const Vector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

// Largest absolute row sum.
double row_norm(const SparseMatrix& m) {
  double best = 0.0;
  for (int r = 0; r < m.outerSize(); ++r) {
    double s = 0.0;
    for (SparseMatrix::InnerIterator it(m, r); it; ++it) s += std::abs(it.value());
    best = std::max(best, s);
  }
  return best;
}

double column_norm(const ColMatrix& m) {
  double best = 0.0;
  for (int c = 0; c < m.outerSize(); ++c) {
    double s = 0.0;
    for (ColMatrix::InnerIterator it(m, c); it; ++it) s += std::abs(it.value());
    best = std::max(best, s);
  }
  return best;
}

Vector restrict_free(const Grid& g, const Vector& full) { return g.select_free() * full; }

// Assembled S*_u f + 2σ|Ω| div div(φA) at free nodes, through the transposed
// full operators rather than the free-column Jacobian the gradient uses.
Vector assembled_el2(const ProblemSpec& spec, const ScalarField& u, const EnergyParams& params, double* scale) {
  const Grid& g = *spec.grid();
  const MultiplierSet m = extract_multipliers(spec, u, params);
  const Linearization lin = assemble_linearization(spec, u);
  Vector r = apply_adjoint(g, lin.full, m.f.values());
  *scale = inf_norm(m.f.values()) * row_norm(lin.full);
  if (params.anchor && params.sigma > 0.0) {
    const SparseMatrix k = principal_part(spec);
    const double factor = 2.0 * params.sigma * g.operator_measure();
    r += factor * apply_adjoint(g, k, m.phi.values());
    *scale += factor * inf_norm(m.phi.values()) * row_norm(k);
  }
  return restrict_free(g, r);
}

double evaluate_or_inf(const EnergyModel& model, const ScalarField& u) {
  try {
    const double e = model.value(u).total;
    return std::isfinite(e) ? e : std::numeric_limits<double>::infinity();
  } catch (const DomainError&) {
    return std::numeric_limits<double>::infinity();
  }
}

// Centered 1-D stencils with the out-of-range entries dropped.
SparseMatrix centered_1d(int n, double h, bool second) {
  std::vector<Triplet> t;
  for (int i = 0; i < n; ++i) {
    if (second) {
      if (i > 0) t.emplace_back(i, i - 1, 1.0 / (h * h));
      t.emplace_back(i, i, -2.0 / (h * h));
      if (i + 1 < n) t.emplace_back(i, i + 1, 1.0 / (h * h));
    } else {
      if (i > 0) t.emplace_back(i, i - 1, -0.5 / h);
      if (i + 1 < n) t.emplace_back(i, i + 1, 0.5 / h);
    }
  }
  SparseMatrix m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

SparseMatrix kron(const SparseMatrix& a, const SparseMatrix& b) {
  std::vector<Triplet> t;
  for (int i = 0; i < a.outerSize(); ++i) {
    for (SparseMatrix::InnerIterator ia(a, i); ia; ++ia) {
      for (int k = 0; k < b.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator ib(b, k); ib; ++ib) {
          t.emplace_back(ia.row() * b.rows() + ib.row(), ia.col() * b.cols() + ib.col(), ia.value() * ib.value());
        }
      }
    }
  }
  SparseMatrix m(a.rows() * b.rows(), a.cols() * b.cols());
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

SparseMatrix eye(int n) {
  SparseMatrix m(n, n);
  m.setIdentity();
  return m;
}

// S'_u with centered stencils at every node, boundary rows included. Its
// transpose is the conservative discretisation of S*_u at operator nodes.
SparseMatrix centered_linearization(const ProblemSpec& spec, const ScalarField& u) {
  const Grid& g = *spec.grid();
  const CoefficientField& a = spec.coefficients();
  const ReactionSamples r = sample_reaction(spec, u);
  std::array<SparseMatrix, 2> d1;
  SparseMatrix c;
  if (g.dim() == 1) {
    d1[0] = centered_1d(g.nodes(0), g.spacing(0), false);
    c = a.a11().asDiagonal() * centered_1d(g.nodes(0), g.spacing(0), true);
  } else {
    const SparseMatrix ix = eye(g.nodes(0)), iy = eye(g.nodes(1));
    const SparseMatrix dx = centered_1d(g.nodes(0), g.spacing(0), false);
    const SparseMatrix dy = centered_1d(g.nodes(1), g.spacing(1), false);
    d1[0] = kron(dx, iy);
    d1[1] = kron(ix, dy);
    c = a.a11().asDiagonal() * kron(centered_1d(g.nodes(0), g.spacing(0), true), iy);
    c += (2.0 * a.a12()).asDiagonal() * kron(dx, dy);
    c += a.a22().asDiagonal() * kron(ix, centered_1d(g.nodes(1), g.spacing(1), true));
  }
  for (int k = 0; k < g.dim(); ++k) c += r.b_z[k].asDiagonal() * d1[k];
  c += r.b_y.asDiagonal() * eye(g.size());
  c.prune(0.0);
  return c;
}

// Hager's estimate of ‖M⁻¹‖₁ from LU solves with M and Mᵀ.
double inverse_norm_estimate(const Eigen::SparseLU<ColMatrix>& lu, const Eigen::SparseLU<ColMatrix>& lu_t, int n) {
  Vector x = Vector::Constant(n, 1.0 / n);
  double estimate = 0.0;
  for (int iter = 0; iter < 5; ++iter) {
    const Vector y = lu.solve(x);
    if (!y.allFinite()) return std::numeric_limits<double>::infinity();
    estimate = y.lpNorm<1>();
    const Vector xi = y.unaryExpr([](double v) { return v >= 0.0 ? 1.0 : -1.0; });
    const Vector z = lu_t.solve(xi);
    if (!z.allFinite()) return std::numeric_limits<double>::infinity();
    Eigen::Index j;
    const double zmax = z.cwiseAbs().maxCoeff(&j);
    if (zmax <= z.dot(x)) break;
    x.setZero();
    x[j] = 1.0;
  }
  return estimate;
}

}  // namespace

InnerResult minimize_inner(const ProblemSpec& spec, const EnergyParams& params, const ScalarField& warm_start,
                           const InnerOptions& options) {
  const Grid& g = *spec.grid();
  const EnergyModel model(spec, params);
  ScalarField u = spec.clamp(warm_start);
  EnergyModel::Evaluation ev = model.evaluate(u, true);
  if (!std::isfinite(ev.value.total)) {
    int node = 0;
    for (int k = 0; k < g.size(); ++k) {
      if (!std::isfinite(ev.S[k])) {
        node = k;
        break;
      }
    }
    throw DomainError("inner solver: energy is not finite at the start (node " + std::to_string(node) + ")", node);
  }

  InnerReport rep;
  rep.initial_energy = ev.value.total;
  Vector grad = model.gradient(ev);
  Vector scaled = model.scaled_gradient(grad);
  Vector free = spec.free_values(u);
  double mu = 0.0;
  int failures = 0;
  double zero_level = 0.0;
  {
    const Vector s0 = eval_S(spec, spec.clamp(spec.boundary().u0)).values();
    double m = 0.0;
    for (int k : g.operator_nodes()) m = std::max(m, std::abs(s0[k]));
    zero_level = options.zero_threshold * (1.0 + m);
  }

  for (;;) {
    rep.grad_norm = inf_norm(scaled);
    rep.tolerance = options.tolerance * std::max(1.0, ev.value.e_p);
    if (rep.grad_norm <= rep.tolerance || ev.value.total <= zero_level) {
      rep.converged = true;
      break;
    }
    if (rep.iterations >= options.max_iterations) break;
    ++rep.iterations;

    const bool model_step = failures < options.max_model_failures;
    SparseMatrix h = model.gauss_newton_hessian(ev);
    Vector diag = h.diagonal();
    const double dmax = diag.size() ? diag.maxCoeff() : 0.0;
    const double floor = dmax > 0.0 ? 1e-14 * dmax : 1.0;
    Vector step;
    if (model_step) {
      for (int i = 0; i < h.rows(); ++i) h.coeffRef(i, i) += mu * std::max(diag[i], floor) + floor;
      Eigen::SimplicialLDLT<ColMatrix> ldlt(ColMatrix(h.transpose()));
      if (ldlt.info() != Eigen::Success) {
        ++failures;
        mu = std::max(10.0 * mu, 1e-8);
        continue;
      }
      step = -ldlt.solve(grad);
    } else {
      step = -grad.cwiseQuotient(diag.cwiseMax(floor));
    }
    const double slope = grad.dot(step);
    if (model_step && mu <= 1e-6 && -slope <= kEps * std::max(1.0, ev.value.total)) {
      rep.converged = true;
      rep.stationary_at_rounding = true;
      break;
    }
    bool accepted = false;
    ScalarField trial;
    if (slope < 0.0 && step.allFinite()) {
      const double e0 = ev.value.total;
      // Below this the predicted decrease is lost in rounding of the energy.
      const bool noise = -slope <= 64.0 * kEps * std::abs(e0);
      double alpha = 1.0;
      for (int k = 0; k < 40 && !accepted; ++k, alpha *= 0.5) {
        trial = spec.with_free_values(free + alpha * step);
        const double e1 = evaluate_or_inf(model, trial);
        if (e1 <= e0 + 1e-4 * alpha * slope) {
          accepted = true;
        } else if (noise && e1 <= e0 + 64.0 * kEps * std::abs(e0)) {
          const EnergyModel::Evaluation probe = model.evaluate(trial, true);
          accepted = inf_norm(model.scaled_gradient(model.gradient(probe))) < rep.grad_norm;
          if (!accepted) break;
        }
        if (accepted) break;
      }
    }
    if (!accepted) {
      ++failures;
      mu = std::max(10.0 * mu, 1e-8);
      if (failures > options.max_model_failures + 5) break;
      continue;
    }
    if (!model_step) ++rep.gradient_steps;
    ++rep.accepted_steps;
    failures = 0;
    mu = mu > 1e-12 ? mu / 3.0 : 0.0;
    u = trial;
    free = spec.free_values(u);
    ev = model.evaluate(u, true);
    grad = model.gradient(ev);
    scaled = model.scaled_gradient(grad);
  }
  rep.energy = ev.value;

  double scale = 0.0;
  const Vector el2 = assembled_el2(spec, u, params, &scale);
  rep.el2_mismatch = scale > 0.0 ? inf_norm(el2 - scaled) / scale : 0.0;
  return {std::move(u), rep};
}

AdjointKernel solve_adjoint_kernel(const ProblemSpec& spec, const ScalarField& u) {
  const Grid& g = *spec.grid();
  const SparseMatrix c = centered_linearization(spec, u);
  const SparseMatrix ct = SparseMatrix(c.transpose());
  const SparseMatrix& sel = g.select_operator();
  const ColMatrix m = ColMatrix(sel * ct * sel.transpose());
  Vector boundary_ones = Vector::Zero(g.size());
  for (int k : g.boundary_nodes()) boundary_ones[k] = 1.0;
  const Vector rhs = -(sel * (ct * boundary_ones));
  const int n = static_cast<int>(m.rows());

  AdjointKernel out;
  Vector f = Vector::Zero(g.size());
  Eigen::SparseLU<ColMatrix> lu;
  lu.compute(m);
  bool singular = lu.info() != Eigen::Success;
  if (!singular) {
    Eigen::SparseLU<ColMatrix> lu_t;
    lu_t.compute(ColMatrix(m.transpose()));
    singular = lu_t.info() != Eigen::Success;
    if (!singular) {
      out.condition_estimate = column_norm(m) * inverse_norm_estimate(lu, lu_t, n);
      singular = !(out.condition_estimate <= 1e14);
    }
  }
  if (!singular) {
    const Vector x = lu.solve(rhs);
    f = boundary_ones + sel.transpose() * x;
    out.branch = AdjointKernel::Branch::kBoundaryValue;
  } else {
    if (!(out.condition_estimate > 0.0)) out.condition_estimate = std::numeric_limits<double>::infinity();
    out.branch = AdjointKernel::Branch::kKernel;
    ColMatrix normal = ColMatrix(m.transpose() * m);
    const double shift = 1e-13 * normal.diagonal().cwiseAbs().maxCoeff();
    for (int i = 0; i < n; ++i) normal.coeffRef(i, i) += shift;
    Eigen::SimplicialLDLT<ColMatrix> ldlt(normal);
    Vector x = Vector::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
    out.converged = false;
    for (int it = 0; it < 200 && ldlt.info() == Eigen::Success; ++it) {
      Vector y = ldlt.solve(x);
      y.normalize();
      if (y.dot(x) < 0.0) y = -y;
      const double change = (y - x).norm();
      x = y;
      out.power_iterations = it + 1;
      if (change < 1e-12) {
        out.converged = true;
        break;
      }
    }
    f = sel.transpose() * x;
  }

  double l1 = 0.0, mass = 0.0;
  for (int k = 0; k < g.size(); ++k) {
    l1 += g.weights()[k] * std::abs(f[k]);
    mass += g.weights()[k] * f[k];
  }
  if (l1 > 0.0) f /= (mass < 0.0 ? -l1 : l1);
  out.f = ScalarField(spec.grid(), f);

  const Linearization lin = assemble_linearization(spec, u);
  const Vector r = restrict_free(g, apply_adjoint(g, lin.full, f));
  const double scale = inf_norm(f) * row_norm(SparseMatrix(m));
  out.residual = scale > 0.0 ? inf_norm(r) / scale : 0.0;
  return out;
}

double default_sigma(const ProblemSpec& spec, const ScalarField& anchor, double p0) {
  const Grid& g = *spec.grid();
  const double e2 = energy_p(spec, anchor, EnergyParams::plain(2.0, g.dim()));
  const Vector t = principal_part(spec) * anchor.values();
  double m = 0.0;
  for (int k : g.operator_nodes()) m = std::max(m, std::abs(t[k]));
  double norm = 0.0;
  if (m > 0.0) {
    double sum = 0.0;
    for (int k : g.operator_nodes()) sum += g.weights()[k] * std::pow(std::abs(t[k]) / m, p0);
    norm = m * std::pow(sum, 1.0 / p0);
  }
  return 10.0 * (e2 + 1.0) / (norm * norm + 1.0);
}

ContinuationState run_continuation(const ProblemSpec& spec, ContinuationMode mode,
                                   const ContinuationOptions& options) {
  const Grid& g = *spec.grid();
  if (!(options.p_start >= 2.0) || !(options.p_max >= options.p_start)) {
    throw std::invalid_argument("continuation: need 2 ≤ p_start ≤ p_max");
  }
  ContinuationState state;
  state.mode = mode;
  state.p0 = options.p0.value_or(g.dim() + 1.0);
  for (double p = options.p_start; p <= options.p_max * (1.0 + 1e-12); p *= 2.0) state.schedule.push_back(p);
  if (state.schedule.back() < options.p_max * (1.0 - 1e-12)) state.schedule.push_back(options.p_max);

  if (mode == ContinuationMode::kCertify) {
    if (!options.anchor) throw std::invalid_argument("continuation: certify mode needs an anchor");
    state.anchor = spec.clamp(*options.anchor);
    state.sigma = options.sigma.value_or(default_sigma(spec, *state.anchor, state.p0));
    if (!(state.sigma > 0.0)) throw std::invalid_argument("continuation: certify mode needs sigma > 0");
  }

  const ScalarField cold = spec.clamp(spec.boundary().u0);
  {
    const Vector s0 = eval_S(spec, cold).values();
    double m = 0.0;
    for (int k : g.operator_nodes()) m = std::max(m, std::abs(s0[k]));
    state.scale = 1.0 + m;
  }
  state.u = cold;
  int calm = 0;
  for (std::size_t level = 0; level < state.schedule.size(); ++level) {
    EnergyParams params{state.schedule[level], state.sigma, state.anchor, state.p0};
    if (mode == ContinuationMode::kConstruct) params.anchor.reset();
    const EnergyModel model(spec, params);

    LevelRecord rec;
    rec.p = params.p;
    rec.warm_start_energy = model.value(state.u).total;
    if (options.record_cold_start) rec.cold_start_energy = model.value(cold).total;
    InnerOptions inner = options.inner;
    inner.zero_threshold = options.zero_threshold;
    InnerResult res = minimize_inner(spec, params, state.u, inner);
    state.u = std::move(res.u);
    rec.inner = res.report;
    rec.energy = res.report.energy;
    state.multipliers = extract_multipliers(spec, state.u, params);
    rec.normalization_residual = state.multipliers.normalization_residual;
    rec.duality_residual = duality_identity_residual(spec, state.u, state.multipliers).relative;
    const Vector s = eval_S(spec, state.u).values();
    for (int k : g.operator_nodes()) rec.e_sup = std::max(rec.e_sup, std::abs(s[k]));
    state.all_converged = state.all_converged && rec.inner.converged;

    if (!state.history.empty()) {
      const LevelRecord& prev = state.history.back();
      const double slack = 10.0 * std::max(prev.inner.tolerance, rec.inner.tolerance);
      if (rec.energy.total < prev.energy.total - slack) state.monotone = false;
      if (mode == ContinuationMode::kCertify && rec.p > 8.0 &&
          rec.energy.a > prev.energy.a * (1.0 + 1e-6) + 1e-12) {
        state.penalty_decreasing = false;
      }
      const double zero = options.zero_threshold * state.scale;
      const double change = prev.energy.total <= zero && rec.energy.total <= zero
                                ? 0.0
                                : std::abs(rec.energy.total - prev.energy.total) / prev.energy.total;
      calm = change < options.stop_tolerance ? calm + 1 : 0;
    }
    state.history.push_back(rec);
    state.index = static_cast<int>(level);
    if (options.early_stop && calm >= options.stop_after) {
      state.stopped_early = level + 1 < state.schedule.size();
      break;
    }
  }

  if (state.history.back().energy.e_p <= options.zero_threshold * state.scale) {
    state.kernel = solve_adjoint_kernel(spec, state.u);
  }
  return state;
}

}  // namespace linfel
