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

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "linfel/cli_io.hpp"
#include "linfel/diagnostics.hpp"
#include "linfel/functional.hpp"
#include "linfel/random.hpp"
#include "linfel/solver.hpp"

namespace fs = std::filesystem;
using namespace linfel;

namespace {

const fs::path kScenarios = LINFEL_SCENARIO_DIR;

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
  std::printf("criterion %d: %s %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("linfel-acceptance-" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::vector<fs::path> scenarios() {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(kScenarios)) {
    if (e.path().extension() == ".yaml") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ScalarField wendland_bump(const GridPtr& g, double c, double w, double height) {
  Vector v(g->size());
  for (int k = 0; k < g->size(); ++k) {
    const double r = std::abs(g->point(k)[0] - c) / w;
    v[k] = r < 1.0 ? height * std::pow(1.0 - r, 4) * (4 * r + 1) : 0.0;
  }
  return ScalarField(g, v);
}

/// Runs every bundled scenario in solve and certify mode once.
struct ScenarioRuns {
  std::string name;
  ContinuationState construct;
  ContinuationState certify;
  int exit_solve = 0;
  int exit_certify = 0;
};

std::vector<ScenarioRuns> run_all() {
  std::vector<ScenarioRuns> out;
  for (const fs::path& p : scenarios()) {
    ScenarioRuns r;
    r.name = p.stem().string();
    RunConfig c = load_config(p);
    c.mode = RunMode::kSolve;
    RunArtifact a = run(c, scratch(r.name + "-solve"));
    r.exit_solve = a.exit_code;
    if (a.state) r.construct = *a.state;
    c.mode = RunMode::kCertify;
    c.diagnostics.run_mc = false;
    RunArtifact b = run(c, scratch(r.name + "-certify"));
    r.exit_certify = b.exit_code;
    if (b.state) r.certify = *b.state;
    out.push_back(std::move(r));
  }
  return out;
}

void criterion_1() {
  RunConfig c = load_config(kScenarios / "oracle_1d.yaml");
  c.mode = RunMode::kSolve;
  const auto t0 = std::chrono::steady_clock::now();
  RunArtifact a = run(c, scratch("c1"));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const ContinuationState& st = *a.state;
  const double e = st.history.back().energy.e_p;
  const auto z = zero_crossing_1d(st.multipliers.f);
  const double h = st.u.grid()->spacing(0);
  const bool ok = st.u.grid()->nodes(0) == 513 && st.history.back().p == 128.0 && std::abs(e - 4.0) <= 0.05 * 4.0 &&
                  z && std::abs(*z - 0.5) <= 2 * h && secs <= 60.0;
  report(1, ok,
         "e_128=" + fmt("%.6f", e) + " zero_crossing=" + (z ? fmt("%.6f", *z) : std::string("none")) +
             " cells_off=" + (z ? fmt("%.3f", std::abs(*z - 0.5) / h) : std::string("inf")) + " runtime_s=" +
             fmt("%.3f", secs));
}

void criterion_2() {
  RunConfig c = load_config(kScenarios / "oracle_1d.yaml");
  ProblemSpec spec = build_problem(c);
  const GridPtr& g = spec.grid();
  Oracle1DSolution o = oracle_1d(c.oracle.a, c.oracle.b);
  ElCheck r = check_el_system(spec, o.sample_u(g), o.sample_f(g), o.e_infty);
  const double h = g->spacing(0);
  const bool ok = r.el1_residual <= 1e-12 && r.flatness <= 1e-12 && r.el2_residual <= 10 * h * h &&
                  r.sign_violations == 0;
  report(2, ok,
         "el1=" + fmt("%.3e", r.el1_residual) + " flatness=" + fmt("%.3e", r.flatness) + " el2=" +
             fmt("%.3e", r.el2_residual) + " bound_10h2=" + fmt("%.3e", 10 * h * h) +
             " sign_violations=" + std::to_string(r.sign_violations));
}

void criteria_3_4_5(const std::vector<ScenarioRuns>& runs) {
  double worst_norm = 0.0, worst_dual = 0.0;
  int levels = 0, monotone_breaks = 0;
  std::string worst_drop;
  for (const auto& r : runs) {
    for (const ContinuationState* st : {&r.construct, &r.certify}) {
      if (st->history.empty()) {
        worst_norm = worst_dual = INFINITY;
        continue;
      }
      for (std::size_t i = 0; i < st->history.size(); ++i) {
        const LevelRecord& rec = st->history[i];
        ++levels;
        worst_norm = std::max(worst_norm, rec.normalization_residual);
        worst_dual = std::max(worst_dual, rec.duality_residual);
        if (i > 0) {
          const LevelRecord& prev = st->history[i - 1];
          const double slack = 10.0 * std::max(prev.inner.tolerance, rec.inner.tolerance);
          if (rec.energy.total < prev.energy.total - slack) {
            ++monotone_breaks;
            worst_drop = r.name + "@p=" + fmt("%g", rec.p);
          }
        }
      }
    }
  }
  const std::string count = " scenarios=" + std::to_string(runs.size()) + " levels=" + std::to_string(levels);
  report(3, worst_norm <= 1e-8, "max_normalization_residual=" + fmt("%.3e", worst_norm) + count);
  report(4, worst_dual <= 1e-10, "max_duality_residual=" + fmt("%.3e", worst_dual) + count);
  report(5, monotone_breaks == 0,
         "breaks=" + std::to_string(monotone_breaks) + (worst_drop.empty() ? "" : " at " + worst_drop) +
             " modes=construct,certify" + count);
}

void criterion_6() {
  auto g = Grid::create({1.0, 1.0}, {13, 13});
  Matrix2 a0, ax, ay;
  a0 << 2.0, 0.3, 0.3, 1.0;
  ax << 0.5, 0.0, 0.0, 0.0;
  ay << 0.0, 0.1, 0.1, 0.2;
  auto data = BoundaryData::from_function(
      g, [](const Point& x) { return std::sin(x[0]) + x[1] * x[1]; },
      [](const Point& x) { return Vector2(std::cos(x[0]), 2 * x[1]); });
  const std::pair<const char*, ReactionFamily> catalogue[] = {
      {"zero", ReactionFamily::zero()},
      {"linear", ReactionFamily::linear(0.3, -1.0, Vector2(0.5, -0.2))},
      {"cubic", ReactionFamily::cubic()},
      {"power", ReactionFamily::power(3.5, -2.0)},
      {"sine", ReactionFamily::sine(-1.0)},
      {"polynomial", ReactionFamily::polynomial({0.2, -0.5, 0.1, -0.3})},
  };
  double worst = 0.0;
  int checks = 0;
  std::string where;
  std::uint64_t seed = 0;
  for (const auto& [name, reaction] : catalogue) {
    ProblemSpec spec = ProblemSpec::create(CoefficientField::affine(g, a0, ax, ay), reaction, data);
    Rng field_rng(++seed);
    Vector noise(g->size());
    for (int k = 0; k < g->size(); ++k) {
      const Point x = g->point(k);
      noise[k] = 0.5 * std::sin(3 * x[0] + 2 * x[1] + field_rng.uniform(0, 6)) + 0.3 * std::cos(5 * x[1]);
    }
    ScalarField u = spec.clamp(ScalarField(g, data.u0.values() + noise));
    ScalarField anchor = spec.clamp(ScalarField(g, data.u0.values() - 0.5 * noise));
    const Vector x0 = spec.free_values(u);
    for (double p : {2.0, 4.0, 8.0}) {
      for (double sigma : {0.0, 1.0}) {
        EnergyParams params{p, sigma, sigma > 0 ? std::optional<ScalarField>(anchor) : std::nullopt, 3.0};
        const Vector grad = gradient_energy(spec, u, params);
        const double gmax = grad.cwiseAbs().maxCoeff();
        const double step = 1e-5 * std::max(1.0, x0.cwiseAbs().maxCoeff());
        Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(p * 10 + sigma)));
        for (int t = 0; t < 20; ++t) {
          const int i = static_cast<int>(rng.uniform() * x0.size());
          Vector xp = x0, xm = x0;
          xp[i] += step;
          xm[i] -= step;
          const double fd = (energy_p(spec, spec.with_free_values(xp), params) -
                             energy_p(spec, spec.with_free_values(xm), params)) / (2 * step);
          const double rel = std::abs(fd - grad[i]) / std::max(std::abs(grad[i]), 1e-3 * gmax);
          ++checks;
          if (rel > worst) {
            worst = rel;
            where = std::string(name) + " p=" + fmt("%g", p) + " sigma=" + fmt("%g", sigma);
          }
        }
      }
    }
  }
  report(6, worst <= 1e-6, "max_relative_error=" + fmt("%.3e", worst) + " (" + where + ") checks=" +
                               std::to_string(checks));
}

void criterion_7() {
  RunConfig c = load_config(kScenarios / "oracle_1d.yaml");
  ProblemSpec spec = build_problem(c);
  const GridPtr& g = spec.grid();
  Oracle1DSolution o = oracle_1d(c.oracle.a, c.oracle.b);
  ScalarField u = o.sample_u(g);
  AlmostMinimiserOptions mc;
  mc.trials = 200;
  mc.amplitudes = {1e-1, 1e-2, 1e-3};
  mc.seed = c.seed;
  mc.slack = 1e-6;
  AlmostMinimiserStats good = almost_minimiser_mc(spec, u, mc);

  ScalarField bad(g, u.values() + wendland_bump(g, 0.3, 0.1, 0.1).values());
  AlmostMinimiserStats bad_mc = almost_minimiser_mc(spec, bad, mc);
  MultiplierSet m;
  m.f = o.sample_f(g);
  m.e_p = o.e_infty;
  m.p = c.solver.p_max;
  m.phi = ScalarField(g);
  CertificateOptions copts;
  copts.run_mc = false;
  copts.run_energy_identities = false;
  CertificateReport bad_cert = certify(spec, bad, m, copts);

  const bool ok = good.trials == 200 && good.violations == 0 && bad_mc.violations > 0 && !bad_cert.pass();
  report(7, ok,
         "oracle_violations=" + std::to_string(good.violations) + "/" + std::to_string(good.evaluations) +
             " M=" + fmt("%.3e", good.m_theory) + " C2=" + fmt("%g", good.c2_bound) +
             " corrupted_mc_violations=" + std::to_string(bad_mc.violations) +
             " corrupted_certificate=" + (bad_cert.pass() ? "pass" : "fail") +
             " corrupted_el1=" + fmt("%.3g", bad_cert.el.el1_residual) +
             " corrupted_flatness=" + fmt("%.3g", bad_cert.el.flatness));
}

void criterion_8() {
  RunConfig c = load_config(kScenarios / "cubic_1d.yaml");
  c.mode = RunMode::kSolve;
  RunArtifact a = run(c, scratch("c8"));
  const ContinuationState& st = *a.state;
  ProblemSpec spec = build_problem(c);
  bool all = st.all_converged;
  for (const auto& rec : st.history) all = all && rec.inner.converged;
  const LevelRecord& last = st.history.back();
  ElCheck el = check_el_system(spec, st.u, st.multipliers.f, last.energy.e_p);

  double res[2];
  const int n[2] = {129, 257};
  const double len = c.grid.extent[0];
  for (int i = 0; i < 2; ++i) {
    auto g = Grid::create({len}, {n[i]});
    auto data = BoundaryData::from_function(
        g, [len](const Point& x) { return std::sin(std::numbers::pi * x[0] / len); },
        [len](const Point& x) {
          return Vector2(std::numbers::pi / len * std::cos(std::numbers::pi * x[0] / len), 0.0);
        });
    ProblemSpec s = ProblemSpec::create(CoefficientField::identity(g), ReactionFamily::cubic(), data);
    res[i] = energy_identities(s, data.u0).at("energy1").residual;
  }
  const double ratio = res[0] / res[1];
  const bool nonzero_data = spec.boundary().u0.values().cwiseAbs().maxCoeff() > 0.0;
  const bool ok = nonzero_data && all && last.p == 128.0 && el.flatness <= 0.05 && ratio >= 3.0 && ratio <= 5.0;
  report(8, ok,
         "levels=" + std::to_string(st.history.size()) + " all_converged=" + (all ? "yes" : "no") +
             " e_128=" + fmt("%.6f", last.energy.e_p) + " flatness=" + fmt("%.4f", el.flatness) +
             " energy1_residuals=" + fmt("%.3e", res[0]) + "," + fmt("%.3e", res[1]) +
             " richardson_ratio=" + fmt("%.3f", ratio));
}

void criterion_9() {
  RunConfig c = load_config(kScenarios / "harmonic_2d.yaml");
  c.mode = RunMode::kSolve;
  RunArtifact a = run(c, scratch("c9"));
  const ContinuationState& st = *a.state;
  if (!st.kernel) {
    report(9, false, "no adjoint kernel computed; e_final=" + fmt("%.3e", st.history.back().energy.e_p));
    return;
  }
  const AdjointKernel& k = *st.kernel;
  const Grid& g = *k.f.grid();
  double l1 = 0.0;
  for (int i = 0; i < g.size(); ++i) l1 += g.weights()[i] * std::abs(k.f[i]);
  const bool ok = k.residual <= 1e-8 && std::abs(l1 - 1.0) <= 1e-12 && a.exit_code == kExitOk;
  report(9, ok,
         "e_final=" + fmt("%.3e", st.history.back().energy.e_p) + " branch=" +
             (k.branch == AdjointKernel::Branch::kBoundaryValue ? "boundary_value" : "kernel") + " residual=" +
             fmt("%.3e", k.residual) + " l1=" + fmt("%.15f", l1));
}

void criterion_10() {
  int files = 0, mismatches = 0, nonzero = 0;
  std::string first_bad;
  for (const fs::path& p : scenarios()) {
    RunConfig c = load_config(p);
    c.mode = RunMode::kCertify;
    const fs::path a = scratch(p.stem().string() + "-det-a"), b = scratch(p.stem().string() + "-det-b");
    ::setenv("LINFEL_THREADS", "1", 1);
    run(c, a);
    ::setenv("LINFEL_THREADS", "4", 1);
    run(c, b);
    ::unsetenv("LINFEL_THREADS");
    for (const auto& e : fs::directory_iterator(a)) {
      if (e.path().extension() != ".csv") continue;
      ++files;
      if (slurp(e.path()) != slurp(b / e.path().filename())) {
        ++mismatches;
        if (first_bad.empty()) first_bad = p.stem().string() + "/" + e.path().filename().string();
      }
    }
    if (!compare(a, b).identical()) ++nonzero;
  }
  report(10, files > 0 && mismatches == 0 && nonzero == 0,
         "csv_files=" + std::to_string(files) + " byte_mismatches=" + std::to_string(mismatches) +
             (first_bad.empty() ? "" : " first=" + first_bad) + " nonzero_compares=" + std::to_string(nonzero));
}

}  // namespace

int main() {
  try {
    criterion_1();
    criterion_2();
    criteria_3_4_5(run_all());
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();
  } catch (const std::exception& e) {
    std::printf("acceptance aborted: %s\n", e.what());
    return 2;
  }
  fs::remove_all(fs::temp_directory_path() / ("linfel-acceptance-" + std::to_string(::getpid())));
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
