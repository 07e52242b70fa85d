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

#include "linfel/functional.hpp"

#include <cmath>
#include <stdexcept>

namespace linfel {
namespace {

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// (Σ_{operator} w |v|^q)^{1/q}, max-factored.
double operator_norm(const Grid& g, const Vector& v, double q) {
  double m = 0.0;
  for (int k : g.operator_nodes()) m = std::max(m, std::abs(v[k]));
  if (m == 0.0) return 0.0;
  double sum = 0.0;
  for (int k : g.operator_nodes()) sum += g.weights()[k] * std::pow(std::abs(v[k]) / m, q);
  return m * std::pow(sum, 1.0 / q);
}

// sign(v)·scale·(|v|/scale)^{q−1} on operator nodes, computed in the log domain.
Vector power_density(const Grid& g, const Vector& v, double scale, double q) {
  Vector out = Vector::Zero(g.size());
  if (!(scale > 0.0)) return out;
  const double log_scale = std::log(scale);
  for (int k : g.operator_nodes()) {
    if (v[k] == 0.0) continue;
    out[k] = sign(v[k]) * std::exp((q - 1.0) * (std::log(std::abs(v[k])) - log_scale));
  }
  return out;
}

Vector restrict_to_operator(const Grid& g, const Vector& full) { return g.select_operator() * full; }

}  // namespace

void EnergyParams::validate(int dim) const {
  if (!(p >= 2.0) || !std::isfinite(p)) throw std::invalid_argument("energy: p must be finite and at least 2");
  if (!(sigma >= 0.0)) throw std::invalid_argument("energy: sigma must be nonnegative");
  if (sigma > 0.0 && !anchor) throw std::invalid_argument("energy: sigma > 0 requires an anchor");
  if (!(p0 > dim)) throw std::invalid_argument("energy: p0 must exceed the dimension");
}

EnergyModel::EnergyModel(const ProblemSpec& spec, EnergyParams params) : spec_(spec), params_(std::move(params)) {
  const Grid& g = *spec.grid();
  params_.validate(g.dim());
  if (params_.anchor) {
    principal_ = principal_part(spec);
    principal_free_ = g.select_operator() * principal_ * g.select_free().transpose();
    anchor_principal_ = principal_ * params_.anchor->values();
  }
}

EnergyModel::Evaluation EnergyModel::evaluate(const ScalarField& u, bool with_linearization) const {
  const Grid& g = *spec_.grid();
  Evaluation e;
  e.S = eval_S(spec_, u).values();
  e.value.e_p = mean_integral(e.S, g.weights(), g.operator_nodes(), params_.p);
  // f = sign(S)(|S|/e)^{p−1}; the density of ∇E_p is ŵ f.
  e.f = power_density(g, e.S, e.value.e_p, params_.p);
  e.T = Vector::Zero(g.size());
  e.phi = Vector::Zero(g.size());
  if (params_.anchor) {
    e.T = principal_ * u.values() - anchor_principal_;
    e.value.a = operator_norm(g, e.T, params_.p0);
    if (e.value.a > 0.0) e.phi = e.value.a * power_density(g, e.T, e.value.a, params_.p0);
    e.value.penalty = params_.sigma * e.value.a * e.value.a;
  }
  e.value.total = e.value.e_p + e.value.penalty;
  if (with_linearization) e.linearization = assemble_linearization(spec_, u);
  return e;
}

EnergyValue EnergyModel::value(const ScalarField& u) const { return evaluate(u, false).value; }

Vector EnergyModel::gradient(const Evaluation& e) const {
  const Grid& g = *spec_.grid();
  const Vector w_op = restrict_to_operator(g, g.weights());
  Vector grad = e.linearization.jacobian.transpose() *
                (w_op.cwiseProduct(restrict_to_operator(g, e.f)) / g.operator_measure());
  if (params_.anchor && params_.sigma > 0.0) {
    grad += 2.0 * params_.sigma * (principal_free_.transpose() * w_op.cwiseProduct(restrict_to_operator(g, e.phi)));
  }
  return grad;
}

SparseMatrix EnergyModel::gauss_newton_hessian(const Evaluation& e) const {
  const Grid& g = *spec_.grid();
  const auto ops = g.operator_nodes();
  const double p = params_.p;
  const int m = static_cast<int>(ops.size());
  const int nf = static_cast<int>(g.free_nodes().size());
  SparseMatrix h(nf, nf);
  if (e.value.e_p > 0.0) {
    Vector d(m);
    const double log_e = std::log(e.value.e_p);
    for (int r = 0; r < m; ++r) {
      const double s = std::abs(e.S[ops[r]]);
      const double ratio = p == 2.0 ? 1.0 : (s == 0.0 ? 0.0 : std::exp((p - 2.0) * (std::log(s) - log_e)));
      d[r] = g.weights()[ops[r]] / g.operator_measure() * ratio;
    }
    const SparseMatrix& j = e.linearization.jacobian;
    h = ((p - 1.0) / e.value.e_p) * SparseMatrix(j.transpose() * d.asDiagonal() * j);
  }
  if (params_.anchor && params_.sigma > 0.0) {
    const double p0 = params_.p0;
    Vector d(m);
    const double a = e.value.a;
    const double floor_weight = std::pow(g.operator_measure(), -(p0 - 2.0) / p0);
    for (int r = 0; r < m; ++r) {
      const double t = std::abs(e.T[ops[r]]);
      const double ratio = a > 0.0 ? std::pow(t / a, p0 - 2.0) : floor_weight;
      d[r] = g.weights()[ops[r]] * ratio;
    }
    const SparseMatrix& k = principal_free_;
    SparseMatrix hp = SparseMatrix(k.transpose() * d.asDiagonal() * k);
    h += (2.0 * params_.sigma * (p0 - 1.0)) * hp;
  }
  return h;
}

Vector EnergyModel::scaled_gradient(const Vector& gradient) const {
  const Grid& g = *spec_.grid();
  const auto free = g.free_nodes();
  Vector out(gradient.size());
  for (std::size_t i = 0; i < free.size(); ++i) {
    out[i] = gradient[i] * g.operator_measure() / g.weights()[free[i]];
  }
  return out;
}

EnergyValue evaluate_energy(const ProblemSpec& spec, const ScalarField& u, const EnergyParams& params) {
  return EnergyModel(spec, params).value(u);
}

Vector gradient_energy(const ProblemSpec& spec, const ScalarField& u, const EnergyParams& params) {
  const EnergyModel model(spec, params);
  return model.gradient(model.evaluate(u, true));
}

MultiplierSet extract_multipliers(const ProblemSpec& spec, const ScalarField& u, const EnergyParams& params) {
  const Grid& g = *spec.grid();
  const EnergyModel model(spec, params);
  const EnergyModel::Evaluation e = model.evaluate(u, false);
  MultiplierSet m;
  m.p = params.p;
  m.e_p = e.value.e_p;
  m.a_p = e.value.a;
  m.f = ScalarField(spec.grid(), e.f);
  m.phi = ScalarField(spec.grid(), e.phi);
  m.degenerate = !(m.e_p > 0.0);
  if (!m.degenerate) {
    const double dual = params.p / (params.p - 1.0);
    m.normalization_residual = std::abs(mean_integral(e.f, g.weights(), g.operator_nodes(), dual) - 1.0);
  }
  return m;
}

DualityResidual duality_identity_residual(const ProblemSpec& spec, const ScalarField& u,
                                          const MultiplierSet& multipliers) {
  const Grid& g = *spec.grid();
  const Vector s = eval_S(spec, u).values();
  DualityResidual r;
  if (multipliers.e_p > 0.0) {
    double pairing = 0.0;
    for (int k : g.operator_nodes()) pairing += g.weights()[k] * multipliers.f[k] * s[k];
    const double target = g.operator_measure() * multipliers.e_p;
    r.relative = std::abs(pairing - target) / target;
  }
  // S'_u u − g = A : D²u + b, node by node.
  const Linearization lin = assemble_linearization(spec, u);
  const ReactionSamples b = sample_reaction(spec, u);
  const VectorField du = gradient(u);
  const Vector lu = lin.full * u.values();
  double worst = 0.0;
  for (int k = 0; k < g.size(); ++k) {
    double gk = -b.b[k] + u[k] * b.b_y[k];
    for (int a = 0; a < g.dim(); ++a) gk += du.component[a][k] * b.b_z[a][k];
    worst = std::max(worst, std::abs(lu[k] - gk - s[k]));
  }
  r.nodewise = worst / (1.0 + s.cwiseAbs().maxCoeff());
  return r;
}

}  // namespace linfel
