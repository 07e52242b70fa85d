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

#include "linfel/diagnostics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <thread>

#include "linfel/errors.hpp"
#include "linfel/random.hpp"

namespace linfel {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

double inf_norm(const Vector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

int sgn(double v) { return (v > 0.0) - (v < 0.0); }

double row_norm(const SparseMatrix& m) {
  double best = 0.0;
  for (int r = 0; r < m.outerSize(); ++r) {
    double s = 0.0;
    for (SparseMatrix::InnerIterator it(m, r); it; ++it) s += std::abs(it.value());
    best = std::max(best, s);
  }
  return best;
}

// Quintic Wendland profile (1 − r)⁴(4r + 1), C² with compact support.
double wendland(double r) {
  if (r >= 1.0) return 0.0;
  const double q = 1.0 - r;
  return q * q * q * q * (4.0 * r + 1.0);
}

struct Bump {
  std::array<double, 2> centre{};
  std::array<double, 2> radius{};
};

// Support kept off the two clamped layers along every axis.
Bump random_bump(const Grid& g, Rng& rng) {
  Bump b;
  for (int k = 0; k < g.dim(); ++k) {
    const double h = g.spacing(k), length = g.extent(k);
    const double r_max = 0.5 * (length - 2.0 * h);
    const double r_lo = std::min(2.0 * h, r_max);
    const double r_hi = std::max(r_lo, std::min(0.25 * length, r_max));
    b.radius[k] = rng.uniform(r_lo, r_hi);
    b.centre[k] = rng.uniform(h + b.radius[k], length - h - b.radius[k]);
  }
  return b;
}

void add_bump(const Grid& g, const Bump& b, double coeff, Vector& out) {
  for (int node : g.free_nodes()) {
    const Point x = g.point(node);
    double v = coeff;
    for (int k = 0; k < g.dim(); ++k) v *= wendland(std::abs(x[k] - b.centre[k]) / b.radius[k]);
    out[node] += v;
  }
}

int thread_count(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("LINFEL_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 1;
}

double relative_gap(double lhs, double rhs) {
  const double scale = std::max(std::abs(lhs), std::abs(rhs));
  return scale > 0.0 ? std::abs(lhs - rhs) / scale : 0.0;
}

// Cubic smooth minimum of width k with its partial derivatives.
void smooth_min(double a, double b, double k, double& value, double& da, double& db) {
  const double t = std::max(k - std::abs(a - b), 0.0) / k;
  const double lo = std::min(a, b);
  value = lo - t * t * t * k / 6.0;
  const double w_small = 1.0 - 0.5 * t * t, w_large = 0.5 * t * t;
  if (a <= b) {
    da = w_small;
    db = w_large;
  } else {
    da = w_large;
    db = w_small;
  }
}

double distance_to_boundary(const Grid& g, int node) {
  const Point x = g.point(node);
  double d = std::numeric_limits<double>::infinity();
  for (int k = 0; k < g.dim(); ++k) d = std::min({d, x[k], g.extent(k) - x[k]});
  return d;
}

}  // namespace

// ---------------------------------------------------------------------------
// Euler–Lagrange system

std::vector<ScalarField> clamped_bump_basis(const GridPtr& grid, int count, std::uint64_t seed) {
  std::vector<ScalarField> basis;
  basis.reserve(count);
  for (int j = 0; j < count; ++j) {
    Rng rng(Rng::derive(seed, j));
    Vector v = Vector::Zero(grid->size());
    add_bump(*grid, random_bump(*grid, rng), 1.0, v);
    basis.emplace_back(grid, std::move(v));
  }
  return basis;
}

ElCheck check_el_system(const ProblemSpec& spec, const ScalarField& u, const ScalarField& f, double e,
                        const ElCheckOptions& options) {
  return check_el_system(spec, u, eval_S(spec, u).values(), f, e, options);
}

ElCheck check_el_system(const ProblemSpec& spec, const ScalarField& u, const Vector& s_values,
                        const ScalarField& f, double e, const ElCheckOptions& options) {
  const Grid& g = *spec.grid();
  if (s_values.size() != g.size()) throw std::invalid_argument("check_el_system: S has the wrong size");
  ElCheck out;
  out.e = e;
  const Vector& fv = f.values();
  double f_max = 0.0;
  for (int k : g.operator_nodes()) f_max = std::max(f_max, std::abs(fv[k]));
  if (f_max == 0.0) {
    out.degenerate = true;
    return out;
  }
  const double e_scale = e > 0.0 ? e : 1.0;
  const double cut = options.support_fraction * f_max;
  for (int k : g.operator_nodes()) {
    const double s = s_values[k], fk = fv[k];
    out.el1_residual = std::max(out.el1_residual, std::abs(std::abs(fk) * s - e * fk) / (e_scale * f_max));
    if (std::abs(fk) > cut) {
      ++out.support_nodes;
      out.flatness = std::max(out.flatness, std::abs(std::abs(s) - e) / e_scale);
    }
    if (e > 0.0 && (fk * s < 0.0 || (fk != 0.0 && s == 0.0))) ++out.sign_violations;
  }

  double l1 = 0.0, layer = 0.0;
  for (int k = 0; k < g.size(); ++k) {
    const double m = g.weights()[k] * std::abs(fv[k]);
    l1 += m;
    if (g.node_class(k) == NodeClass::kBoundaryAdjacent) layer += m;
  }
  out.boundary_layer_mass = layer / l1;

  const SparseMatrix& full = assemble_linearization(spec, u).full;
  for (const ScalarField& phi : clamped_bump_basis(spec.grid(), options.basis_size, options.basis_seed)) {
    const Vector lphi = full * phi.values();
    double pairing = 0.0, lmax = 0.0;
    for (int k : g.operator_nodes()) {
      pairing += g.weights()[k] * fv[k] * lphi[k];
      lmax = std::max(lmax, std::abs(lphi[k]));
    }
    if (lmax > 0.0) out.el2_residual = std::max(out.el2_residual, std::abs(pairing) / (l1 * lmax));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Almost-minimiser test

double w1inf_norm(const ScalarField& phi) {
  double n = inf_norm(phi.values());
  const VectorField d = gradient(phi);
  for (int k = 0; k < phi.grid()->dim(); ++k) n = std::max(n, inf_norm(d.component[k]));
  return n;
}

double sup_energy(const ProblemSpec& spec, const ScalarField& u) {
  const Vector s = eval_S(spec, u).values();
  double m = 0.0;
  for (int k : spec.grid()->operator_nodes()) m = std::max(m, std::abs(s[k]));
  return m;
}

AlmostMinimiserStats almost_minimiser_mc(const ProblemSpec& spec, const ScalarField& u,
                                         const AlmostMinimiserOptions& options) {
  if (options.trials < 1 || options.amplitudes.empty() || options.modes < 1) {
    throw std::invalid_argument("almost_minimiser_mc: need trials, modes and amplitudes");
  }
  const Grid& g = *spec.grid();
  const GridPtr& grid = spec.grid();
  AlmostMinimiserStats out;
  out.trials = options.trials;
  const double base = sup_energy(spec, u);
  double radius = options.taylor_radius;
  if (!(radius > 0.0)) {
    for (double a : options.amplitudes) radius = std::max(radius, std::abs(a));
  }
  out.c2_bound = taylor_remainder_bound(spec, u, radius).c2;
  out.m_theory = 2.0 * out.c2_bound + options.slack;
  out.noise_floor = 64.0 * kEps * (base + row_norm(assemble_linearization(spec, u).full) * inf_norm(u.values()));

  const int n_amp = static_cast<int>(options.amplitudes.size());
  // Per trial, per amplitude, per sign: the energy decrease E∞(u) − E∞(u ± φ).
  std::vector<double> drops(static_cast<std::size_t>(options.trials) * n_amp * 2, 0.0);
  auto run_trial = [&](int t) {
    Rng rng(Rng::derive(options.seed, t));
    Vector psi = Vector::Zero(g.size());
    for (int m = 0; m < options.modes; ++m) {
      const Bump b = random_bump(g, rng);
      add_bump(g, b, rng.uniform(-1.0, 1.0), psi);
    }
    const double norm = w1inf_norm(ScalarField(grid, psi));
    if (norm > 0.0) psi /= norm;
    for (int a = 0; a < n_amp; ++a) {
      for (int side = 0; side < 2; ++side) {
        const double amp = (side == 0 ? 1.0 : -1.0) * options.amplitudes[a];
        double drop = -std::numeric_limits<double>::infinity();
        try {
          drop = base - sup_energy(spec, ScalarField(grid, u.values() + amp * psi));
        } catch (const std::exception&) {
        }
        drops[(static_cast<std::size_t>(t) * n_amp + a) * 2 + side] = drop;
      }
    }
  };
  const int workers = std::min(thread_count(options.threads), options.trials);
  if (workers <= 1) {
    for (int t = 0; t < options.trials; ++t) run_trial(t);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (int t = next++; t < options.trials; t = next++) run_trial(t);
      });
    }
    for (std::thread& th : pool) th.join();
  }

  out.fitted_m = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < n_amp; ++a) {
    AmplitudeStats st;
    st.amplitude = std::abs(options.amplitudes[a]);
    st.max_d = -std::numeric_limits<double>::infinity();
    const double n2 = st.amplitude * st.amplitude;
    for (int t = 0; t < options.trials; ++t) {
      for (int side = 0; side < 2; ++side) {
        const double drop = drops[(static_cast<std::size_t>(t) * n_amp + a) * 2 + side];
        ++out.evaluations;
        st.max_d = std::max(st.max_d, drop / n2);
        if (drop > out.m_theory * n2 + out.noise_floor) ++st.violations;
      }
    }
    out.violations += st.violations;
    out.fitted_m = std::max(out.fitted_m, st.max_d);
    out.per_amplitude.push_back(st);
  }
  const auto by_amp = [](const AmplitudeStats& x, const AmplitudeStats& y) { return x.amplitude < y.amplitude; };
  const AmplitudeStats& smallest = *std::min_element(out.per_amplitude.begin(), out.per_amplitude.end(), by_amp);
  const AmplitudeStats& largest = *std::max_element(out.per_amplitude.begin(), out.per_amplitude.end(), by_amp);
  const double excess_small = std::max(smallest.max_d - out.m_theory, 0.0);
  const double excess_large = std::max(largest.max_d - out.m_theory, 0.0);
  out.amplitude_stable =
      excess_small <= 10.0 * excess_large + out.noise_floor / (smallest.amplitude * smallest.amplitude);
  return out;
}

// ---------------------------------------------------------------------------
// Aronsson residual

AronssonResult aronsson_residual(const ProblemSpec& spec, const ScalarField& u, const std::optional<ScalarField>& f,
                                 double support_fraction) {
  const Grid& g = *spec.grid();
  const ScalarField s = eval_S(spec, u);
  AronssonResult out;
  out.nodal = Vector::Zero(g.size());
  double e = 0.0;
  for (int k : g.operator_nodes()) e = std::max(e, std::abs(s[k]));
  if (e == 0.0) return out;
  const VectorField ds = gradient(s);
  double cut = -1.0;
  if (f) cut = support_fraction * inf_norm(f->values());
  const double scale = e * e / g.min_spacing();
  for (int k : g.free_nodes()) {
    if (f && !(std::abs((*f)[k]) > cut)) continue;
    double d2 = 0.0;
    for (int a = 0; a < g.dim(); ++a) d2 += ds.component[a][k] * ds.component[a][k];
    const double r = std::abs(s[k]) * std::sqrt(d2) / scale;
    out.nodal[k] = r;
    if (r > out.value) {
      out.value = r;
      out.node = k;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Boundary corrector

void smoothed_distance(const Grid& g, double blend, Vector& rho, std::array<Vector, 2>& grad) {
  rho.resize(g.size());
  for (int a = 0; a < 2; ++a) grad[a] = Vector::Zero(a < g.dim() ? g.size() : 0);
  for (int node = 0; node < g.size(); ++node) {
    const Point x = g.point(node);
    double value = x[0];
    Vector2 dv(1.0, 0.0);
    auto fold = [&](double d, const Vector2& dd) {
      double v, da, db;
      smooth_min(value, d, blend, v, da, db);
      dv = da * dv + db * dd;
      value = v;
    };
    fold(g.extent(0) - x[0], Vector2(-1.0, 0.0));
    if (g.dim() == 2) {
      fold(x[1], Vector2(0.0, 1.0));
      fold(g.extent(1) - x[1], Vector2(0.0, -1.0));
    }
    rho[node] = value;
    for (int a = 0; a < g.dim(); ++a) grad[a][node] = dv[a];
  }
}

CorrectorResult boundary_corrector(const ProblemSpec& spec, const ScalarField& g_target, const ScalarField& u) {
  const Grid& g = *spec.grid();
  const CoefficientField& a = spec.coefficients();
  const double h_min = g.min_spacing();
  Vector rho;
  std::array<Vector, 2> drho;
  smoothed_distance(g, 3.0 * h_min, rho, drho);

  const SparseMatrix full = assemble_linearization(spec, u).full;
  const Vector& u0 = spec.boundary().u0.values();
  const Vector h = g_target.values() - full * u0;

  CorrectorResult out;
  Vector v = u0;
  for (int k = 0; k < g.size(); ++k) {
    double lam = a.a11()[k] * drho[0][k] * drho[0][k];
    if (g.dim() == 2) {
      lam += 2.0 * a.a12()[k] * drho[0][k] * drho[1][k] + a.a22()[k] * drho[1][k] * drho[1][k];
    }
    lam *= 2.0;
    if (lam < a.lambda()) {
      lam = a.lambda();
      ++out.floor_nodes;
    }
    v[k] += rho[k] * rho[k] * h[k] / lam;
  }
  const Vector err = (full * v - g_target.values()).cwiseAbs();
  for (double mult : {2.0, 4.0, 8.0}) {
    CollarError c;
    c.radius = mult * h_min;
    for (int k = 0; k < g.size(); ++k) {
      if (distance_to_boundary(g, k) <= c.radius * (1.0 + 1e-12)) {
        ++c.nodes;
        c.error = std::max(c.error, err[k]);
      }
    }
    out.collar.push_back(c);
  }
  out.v = ScalarField(spec.grid(), std::move(v));
  out.rho = ScalarField(spec.grid(), std::move(rho));
  return out;
}

// ---------------------------------------------------------------------------
// Energy identities

std::map<std::string, EnergyIdentity> energy_identities(const ProblemSpec& spec, const ScalarField& u, double beta) {
  const Grid& g = *spec.grid();
  const auto& scalar = spec.reaction().scalar_form();
  if (!spec.coefficients().is_identity() || !scalar) {
    throw std::invalid_argument("energy_identities: need A = I and a reaction g(u)");
  }
  if (!(beta > 0.0)) throw std::invalid_argument("energy_identities: beta must be positive");
  const int n = g.dim();
  const auto& gfun = scalar->g;
  auto big_g = [&](double y) { return scalar->antiderivative ? scalar->antiderivative(y) : antiderivative(gfun, y); };

  const Vector s = eval_S(spec, u).values();
  const VectorField du = gradient(u);
  const Vector& w = g.weights();

  double grad2 = 0.0, ug = 0.0, us = 0.0, big_g_int = 0.0, xs = 0.0;
  for (int k = 0; k < g.size(); ++k) {
    const Point x = g.point(k);
    double q = 0.0, xd = 0.0;
    for (int a = 0; a < n; ++a) {
      q += du.component[a][k] * du.component[a][k];
      xd += x[a] * du.component[a][k];
    }
    grad2 += w[k] * q;
    ug += w[k] * u[k] * gfun(u[k]);
    us += w[k] * u[k] * s[k];
    big_g_int += w[k] * big_g(u[k]);
    xs += w[k] * xd * s[k];
  }

  // Face-wise trapezoid integrals of u ν·Du and of the Pohozaev flux.
  double flux1 = 0.0, flux2 = 0.0;
  for (int axis = 0; axis < n; ++axis) {
    for (int side = 0; side < 2; ++side) {
      const int fixed = side == 0 ? 0 : g.nodes(axis) - 1;
      const double nu = side == 0 ? -1.0 : 1.0;
      const int other = 1 - axis;
      const int m = n == 2 ? g.nodes(other) : 1;
      for (int j = 0; j < m; ++j) {
        double weight = 1.0;
        if (n == 2) weight = (j == 0 || j == m - 1 ? 0.5 : 1.0) * g.spacing(other);
        const int k = n == 1 ? fixed : (axis == 0 ? g.index(fixed, j) : g.index(j, fixed));
        const Point x = g.point(k);
        double q = 0.0, xd = 0.0;
        for (int a = 0; a < n; ++a) {
          q += du.component[a][k] * du.component[a][k];
          xd += x[a] * du.component[a][k];
        }
        const double nd = nu * du.component[axis][k];
        flux1 += weight * u[k] * nd;
        flux2 += weight * (xd * nd - (0.5 * q - big_g(u[k])) * x[axis] * nu);
      }
    }
  }

  std::map<std::string, EnergyIdentity> out;
  auto put = [&](const char* name, double lhs, double rhs) { out[name] = {lhs, rhs, relative_gap(lhs, rhs)}; };
  put("energy1", grad2 - ug, flux1 - us);
  put("energy2", 0.5 * (n - 2.0) * grad2 - n * big_g_int, xs - flux2);
  put("combined", (1.0 / beta - (n - 2.0) / (2.0 * n)) * grad2,
      ug / beta - big_g_int - (us / beta + xs / n) + flux1 / beta + flux2 / n);
  return out;
}

// ---------------------------------------------------------------------------
// 1-D oracle

double Oracle1DSolution::d2u(double x) const {
  if (!switch_point) return sign * e_infty;
  const double s = *switch_point;
  return sign * e_infty * sgn(s - x);
}

double Oracle1DSolution::du(double x) const {
  const double c = sign * e_infty;
  if (!switch_point) return c * x;
  const double s = *switch_point;
  return x <= s ? c * x : c * (2.0 * s - x);
}

double Oracle1DSolution::u(double x) const {
  const double c = sign * e_infty;
  if (!switch_point) return 0.5 * c * x * x;
  const double s = *switch_point;
  if (x <= s) return 0.5 * c * x * x;
  const double t = x - s;
  return c * (0.5 * s * s + s * t - 0.5 * t * t);
}

double Oracle1DSolution::f(double x) const {
  if (!switch_point) return sign;
  const double s = *switch_point;
  return sign * (s - x) * 2.0 / (s * s + (1.0 - s) * (1.0 - s));
}

double Oracle1DSolution::boundary_residual() const {
  return std::max(std::abs(u(1.0) - a), std::abs(du(1.0) - b));
}

namespace {
void require_unit_interval(const Grid& g) {
  if (g.dim() != 1 || std::abs(g.extent(0) - 1.0) > 1e-15) {
    throw std::invalid_argument("oracle: needs the 1-D grid on (0, 1)");
  }
}
}  // namespace

ScalarField Oracle1DSolution::sample_u(const GridPtr& grid) const {
  require_unit_interval(*grid);
  Vector v(grid->size());
  for (int k = 0; k < grid->size(); ++k) v[k] = u(grid->point(k)[0]);
  return ScalarField(grid, std::move(v));
}

ScalarField Oracle1DSolution::sample_f(const GridPtr& grid) const {
  require_unit_interval(*grid);
  Vector v(grid->size());
  for (int k = 0; k < grid->size(); ++k) v[k] = f(grid->point(k)[0]);
  return ScalarField(grid, std::move(v));
}

Vector Oracle1DSolution::sample_d2u(const GridPtr& grid) const {
  require_unit_interval(*grid);
  Vector v(grid->size());
  for (int k = 0; k < grid->size(); ++k) v[k] = d2u(grid->point(k)[0]);
  return v;
}

Oracle1DSolution oracle_1d(double a, double b) {
  if (a == 0.0 && b == 0.0) throw std::invalid_argument("oracle_1d: (a, b) = (0, 0) has the zero solution");
  if (!std::isfinite(a) || !std::isfinite(b)) throw std::invalid_argument("oracle_1d: data must be finite");
  Oracle1DSolution out;
  out.a = a;
  out.b = b;
  if (std::abs(b - 2.0 * a) <= 1e-14 * std::max(std::abs(a), std::abs(b))) {
    out.e_infty = std::abs(b);
    out.sign = sgn(b);
    return out;
  }
  // u(1) = c (2s − s² − ½), u'(1) = c (2s − 1) for u'' = c sgn(s − x).
  auto residual = [&](double s) { return b * (2.0 * s - s * s - 0.5) - a * (2.0 * s - 1.0); };
  double lo = 0.0, hi = 1.0;
  const double f_lo = residual(lo);
  for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    const double fm = residual(mid);
    if (fm == 0.0) {
      lo = hi = mid;
      break;
    }
    if ((fm > 0.0) == (f_lo > 0.0)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double s = 0.5 * (lo + hi);
  const double du_coeff = 2.0 * s - 1.0, u_coeff = 2.0 * s - s * s - 0.5;
  const double c = std::abs(du_coeff) >= std::abs(u_coeff) ? b / du_coeff : a / u_coeff;
  out.switch_point = s;
  out.e_infty = std::abs(c);
  out.sign = sgn(c);
  return out;
}

BruteForce1D oracle_1d_brute_force(double a, double b, int cells, int starts, std::uint64_t seed) {
  if (cells < 2 || starts < 1) throw std::invalid_argument("oracle_1d_brute_force: need cells ≥ 2, starts ≥ 1");
  const double h = 1.0 / cells;
  auto ratio = [&](double psi, double* slope) {
    const double c = std::cos(psi), s = std::sin(psi);
    double den = 0.0, dden = 0.0;
    for (int k = 0; k < cells; ++k) {
      const double v1 = 1.0 - (k + 0.5) * h;
      const double t = c * v1 + s;
      den += h * std::abs(t);
      dden += h * sgn(t) * (-s * v1 + c);
    }
    const double num = c * a + s * b, dnum = -s * a + c * b;
    if (slope) *slope = (dnum * den - num * dden) / (den * den);
    return num / den;
  };
  BruteForce1D out;
  out.starts = starts;
  out.e_infty = -std::numeric_limits<double>::infinity();
  constexpr int kIterations = 20000;
  for (int st = 0; st < starts; ++st) {
    Rng rng(Rng::derive(seed, st));
    double psi = rng.uniform(-std::numbers::pi, std::numbers::pi);
    for (int it = 0; it < kIterations; ++it) {
      double slope = 0.0;
      const double r = ratio(psi, &slope);
      out.e_infty = std::max(out.e_infty, r);
      const double step = 0.5 / std::sqrt(it + 1.0);
      psi += slope == 0.0 ? 0.0 : step * sgn(slope);
      ++out.iterations;
    }
  }
  return out;
}

std::optional<double> zero_crossing_1d(const ScalarField& f) {
  const Grid& g = *f.grid();
  if (g.dim() != 1) throw std::invalid_argument("zero_crossing_1d: needs a 1-D field");
  int prev = -1;
  for (int k : g.operator_nodes()) {
    if (f[k] == 0.0) continue;
    if (prev >= 0 && (f[prev] > 0.0) != (f[k] > 0.0)) {
      const double x0 = g.point(prev)[0], x1 = g.point(k)[0];
      return x0 + (x1 - x0) * f[prev] / (f[prev] - f[k]);
    }
    prev = k;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Certificate

bool CertificateReport::pass() const {
  return !verdicts.empty() && std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; });
}

CertificateReport certify(const ProblemSpec& spec, const ScalarField& u, const MultiplierSet& multipliers,
                          const CertificateOptions& options) {
  CertificateReport out;
  const CertificateThresholds& th = options.thresholds;
  out.e_infty_estimate = multipliers.e_p;
  out.e_sup = sup_energy(spec, u);
  out.el = check_el_system(spec, u, multipliers.f, multipliers.e_p, options.el);
  out.normalization_residual = multipliers.normalization_residual;
  out.duality_residual = duality_identity_residual(spec, u, multipliers).relative;
  out.aronsson_residual = aronsson_residual(spec, u, multipliers.f, options.el.support_fraction).value;
  auto verdict = [&](const char* name, double value, double threshold) {
    out.verdicts.push_back({name, value, threshold, std::isfinite(value) && value <= threshold});
  };
  verdict("multiplier_nonzero", out.el.degenerate ? 1.0 : 0.0, 0.0);
  verdict("el1", out.el.el1_residual, th.el1);
  verdict("flatness", out.el.flatness, th.flatness);
  verdict("el2", out.el.el2_residual, th.el2);
  verdict("sign_violations", out.el.sign_violations, 0.0);
  verdict("normalization", out.normalization_residual, th.normalization);
  verdict("duality", out.duality_residual, th.duality);
  if (options.run_mc) {
    out.almost_min = almost_minimiser_mc(spec, u, options.mc);
    verdict("almost_minimiser", out.almost_min->violations, 0.0);
  }
  if (options.run_energy_identities && spec.coefficients().is_identity() && spec.reaction().scalar_form()) {
    for (const auto& [name, id] : energy_identities(spec, u)) out.energy_identity_residuals[name] = id.residual;
  }
  return out;
}

}  // namespace linfel
