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

#include <cmath>

#include <gtest/gtest.h>

#include "linfel/errors.hpp"
#include "linfel/problem.hpp"
#include "test_util.hpp"

namespace linfel {
namespace {

using testing::max_abs_diff;
using testing::random_smooth;
using testing::random_vector;
using testing::sample;

BoundaryData zero_data(const GridPtr& g) {
  return BoundaryData::from_function(g, [](const Point&) { return 0.0; }, [](const Point&) { return Vector2::Zero(); });
}

ReactionFamily sine_times_z1() {
  return ReactionFamily::custom("sin(y) z1", [](const Point&, double y, const Vector2& z) {
    ReactionValue r;
    r.b = std::sin(y) * z[0];
    r.b_y = std::cos(y) * z[0];
    r.b_z = Vector2(std::sin(y), 0.0);
    r.b_yy = -std::sin(y) * z[0];
    r.b_yz = Vector2(std::cos(y), 0.0);
    return r;
  });
}

TEST(Coefficients, RejectsNonSymmetricAndDegenerate) {
  auto g = Grid::create({1.0, 1.0}, {7, 7});
  Matrix2 a;
  a << 1.0, 0.5, 0.0, 1.0;
  EXPECT_THROW(CoefficientField::constant(g, a), std::invalid_argument);
  a << 1.0, 1.0, 1.0, 1.0;
  EXPECT_THROW(CoefficientField::constant(g, a), std::invalid_argument);
  a << 2.0, 0.0, 0.0, 1.0;
  EXPECT_NEAR(CoefficientField::constant(g, a).lambda(), 1.0, 1e-12);
  EXPECT_TRUE(CoefficientField::identity(g).is_identity());
}

TEST(EvalS, LaplacianOfQuadratic) {
  auto g = Grid::create({1.0, 1.0}, {11, 11});
  auto spec = ProblemSpec::create(CoefficientField::identity(g), ReactionFamily::zero(), zero_data(g));
  auto s = eval_S(spec, sample(g, [](const Point& x) { return 0.5 * x[0] * x[0]; }));
  EXPECT_LE(max_abs_diff(s.values(), Vector::Ones(g->size())), 1e-10);
}

TEST(EvalS, CubicReactionOnConstant) {
  auto g = Grid::create({1.0, 1.0}, {9, 9});
  auto data = BoundaryData::from_function(g, [](const Point&) { return 2.0; }, [](const Point&) { return Vector2::Zero(); });
  auto spec = ProblemSpec::create(CoefficientField::identity(g), ReactionFamily::cubic(), data);
  auto s = eval_S(spec, spec.boundary().u0);
  EXPECT_LE(max_abs_diff(s.values(), Vector::Constant(g->size(), -8.0)), 1e-10);
  auto samples = sample_reaction(spec, spec.boundary().u0);
  EXPECT_LE(max_abs_diff(samples.b_y, Vector::Constant(g->size(), -12.0)), 1e-12);
}

TEST(EvalS, AnisotropicWithGradientReaction) {
  auto g = Grid::create({1.0, 1.0}, {13, 13});
  Matrix2 a;
  a << 2.0, 0.0, 0.0, 1.0;
  auto spec = ProblemSpec::create(CoefficientField::constant(g, a), ReactionFamily::linear(0.0, 0.0, Vector2(1.0, 0.0)),
                                  zero_data(g));
  auto s = eval_S(spec, sample(g, [](const Point& x) { return x[0] * x[0] + x[1]; }));
  Rng rng(5);
  for (int i = 0; i < 10; ++i) {
    int k = static_cast<int>(rng.uniform() * g->size());
    EXPECT_NEAR(s[k], 4.0 + 2.0 * g->point(k)[0], 1e-10) << "node " << k;
  }
}

TEST(EvalS, NonFiniteReactionRaisesDomainError) {
  auto g = Grid::create({1.0}, {9});
  auto spec = ProblemSpec::create(CoefficientField::identity(g), ReactionFamily::polynomial({0.0, 0.0, 0.0, 1e300}),
                                  zero_data(g));
  ScalarField u(g, Vector::Constant(g->size(), 1e10));
  try {
    eval_S(spec, u);
    FAIL() << "expected DomainError";
  } catch (const DomainError& e) {
    EXPECT_GE(e.node(), 0);
  }
}

TEST(Linearization, ZeroReactionIsPrincipalPart) {
  auto g = Grid::create({1.0, 1.0}, {9, 9});
  auto spec = ProblemSpec::create(CoefficientField::identity(g), ReactionFamily::zero(), zero_data(g));
  auto l1 = assemble_linearization(spec, random_smooth(g, 1));
  auto l2 = assemble_linearization(spec, random_smooth(g, 2));
  Vector phi = random_vector(g->size(), 3);
  EXPECT_LE(max_abs_diff(l1.full * phi, l2.full * phi), 1e-12);
  EXPECT_LE(max_abs_diff(l1.full * phi, principal_part(spec) * phi), 1e-12);
}

TEST(Linearization, SecantErrorIsLinearInStep) {
  auto g = Grid::create({1.0, 1.0}, {13, 13});
  Matrix2 a;
  a << 1.5, 0.2, 0.2, 1.0;
  auto spec = ProblemSpec::create(CoefficientField::constant(g, a), sine_times_z1(), zero_data(g));
  auto u = random_smooth(g, 7);
  auto phi = random_smooth(g, 8);
  auto lin = assemble_linearization(spec, u);
  Vector lphi = lin.full * phi.values();
  Vector s0 = eval_S(spec, u).values();
  double err[3];
  double ts[3] = {1e-2, 1e-3, 1e-4};
  for (int i = 0; i < 3; ++i) {
    ScalarField ut(g, u.values() + ts[i] * phi.values());
    err[i] = max_abs_diff((eval_S(spec, ut).values() - s0) / ts[i], lphi);
  }
  EXPECT_NEAR(err[0] / err[1], 10.0, 1.0);
  EXPECT_NEAR(err[1] / err[2], 10.0, 1.0);
}

TEST(Linearization, JacobianIsOperatorRowsFreeColumns) {
  auto g = Grid::create({1.0, 1.0}, {9, 9});
  auto spec = ProblemSpec::create(CoefficientField::identity(g), ReactionFamily::cubic(), zero_data(g));
  auto lin = assemble_linearization(spec, random_smooth(g, 4));
  Vector free = random_vector(static_cast<int>(g->free_nodes().size()), 9);
  Vector full = g->select_free().transpose() * free;
  EXPECT_LE(max_abs_diff(lin.jacobian * free, g->select_operator() * (lin.full * full)), 1e-12);
}

TEST(Adjoint, ConstantIsInteriorNullForLaplacian) {
  auto g = Grid::create({1.0, 1.0}, {15, 15});
  auto spec = ProblemSpec::create(CoefficientField::identity(g), ReactionFamily::zero(), zero_data(g));
  auto r = apply_adjoint(spec, ScalarField(g), ScalarField(g, Vector::Ones(g->size())));
  for (int k = 0; k < g->size(); ++k) {
    auto mi = g->multi_index(k);
    bool deep = mi[0] >= 3 && mi[0] <= 11 && mi[1] >= 3 && mi[1] <= 11;
    if (deep) EXPECT_NEAR(r[k], 0.0, 1e-9) << "node " << k;
  }
}

TEST(Adjoint, TransposeIdentity) {
  auto g = Grid::create({1.0, 2.0}, {11, 13});
  Matrix2 a;
  a << 2.0, 0.3, 0.3, 1.0;
  auto spec = ProblemSpec::create(CoefficientField::constant(g, a), sine_times_z1(), zero_data(g));
  auto u = random_smooth(g, 21);
  auto lin = assemble_linearization(spec, u);
  const Vector& w = g->weights();
  for (int trial = 0; trial < 100; ++trial) {
    Vector f = random_vector(g->size(), 100 + trial);
    for (int k : g->boundary_nodes()) f[k] = 0.0;
    Vector phi = spec.with_free_values(random_vector(static_cast<int>(g->free_nodes().size()), 500 + trial)).values() -
                 spec.boundary().u0.values();
    Vector lphi = lin.full * phi;
    double lhs = 0.0;
    for (int k : g->operator_nodes()) lhs += w[k] * f[k] * lphi[k];
    Vector adj = apply_adjoint(spec, u, ScalarField(g, f)).values();
    double rhs = (w.array() * adj.array() * phi.array()).sum();
    double scale = f.cwiseAbs().maxCoeff() * lphi.cwiseAbs().maxCoeff() * g->volume();
    EXPECT_LE(std::abs(lhs - rhs), 1e-10 * scale);
  }
}

TEST(Adjoint, AffineMultiplierOnOracleProblem) {
  double res[2];
  int n[2] = {65, 129};
  for (int i = 0; i < 2; ++i) {
    auto g = Grid::create({1.0}, {n[i]});
    auto spec = ProblemSpec::create(CoefficientField::identity(g), ReactionFamily::zero(), BoundaryData::hermite_1d(g, 1, 0));
    auto f = sample(g, [](const Point& x) { return 0.5 - x[0]; });
    auto r = apply_adjoint(spec, spec.boundary().u0, f);
    res[i] = 0.0;
    for (int k : g->free_nodes()) res[i] = std::max(res[i], std::abs(r[k]));
  }
  EXPECT_LE(res[1], 1e-8);
}

TEST(Clamp, CopiesBoundaryLayers) {
  auto g = Grid::create({1.0, 1.0}, {9, 9});
  auto data = BoundaryData::from_function(g, [](const Point& x) { return x[0] + 2 * x[1]; },
                                          [](const Point&) { return Vector2(1.0, 2.0); });
  auto spec = ProblemSpec::create(CoefficientField::identity(g), ReactionFamily::zero(), data);
  auto u = spec.clamp(ScalarField(g, Vector::Constant(g->size(), 7.0)));
  for (int k = 0; k < g->size(); ++k) {
    EXPECT_DOUBLE_EQ(u[k], g->is_free(k) ? 7.0 : data.u0[k]);
  }
  Vector fv = spec.free_values(u);
  EXPECT_LE(max_abs_diff(spec.with_free_values(fv).values(), u.values()), 0.0);
  for (int i = 0; i < static_cast<int>(g->boundary_nodes().size()); ++i) {
    Point n = g->outward_normal(g->boundary_nodes()[i]);
    EXPECT_NEAR(data.normal[i], n[0] + 2 * n[1], 1e-12);
  }
}

TEST(Reaction, PartialsAreConsistent) {
  for (const auto& r : {ReactionFamily::cubic(), ReactionFamily::sine(0.7), ReactionFamily::power(3.5, -1.0),
                        ReactionFamily::polynomial({0.1, -1.0, 0.0, -0.5}), sine_times_z1(),
                        ReactionFamily::linear(1.0, -2.0, Vector2(0.5, -0.5))}) {
    EXPECT_NO_THROW(r.check_partials(2, 42)) << r.name();
  }
  auto broken = ReactionFamily::custom("broken", [](const Point&, double y, const Vector2&) {
    ReactionValue v;
    v.b = y * y;
    v.b_y = y;
    return v;
  });
  EXPECT_THROW(broken.check_partials(1, 1), InvariantError);
}

TEST(TaylorBound, ZeroReactionVanishes) {
  auto g = Grid::create({1.0, 1.0}, {9, 9});
  auto spec = ProblemSpec::create(CoefficientField::identity(g), ReactionFamily::zero(), zero_data(g));
  EXPECT_EQ(taylor_remainder_bound(spec, random_smooth(g, 1), 1.0).c2, 0.0);
}

TEST(TaylorBound, CubicAtZero) {
  auto g = Grid::create({1.0}, {9});
  auto spec = ProblemSpec::create(CoefficientField::identity(g), ReactionFamily::cubic(), zero_data(g));
  EXPECT_NEAR(taylor_remainder_bound(spec, ScalarField(g), 1.0).c2, 3.0, 1e-12);
}

TEST(TaylorBound, MatchesFineSampling) {
  auto g = Grid::create({1.0, 1.0}, {9, 9});
  auto spec = ProblemSpec::create(CoefficientField::identity(g), sine_times_z1(), zero_data(g));
  auto u = random_smooth(g, 13);
  const double r = 0.3;
  double c2 = taylor_remainder_bound(spec, u, r).c2;
  auto du = gradient(u);
  double fine = 0.0;
  constexpr int m = 31;
  for (int k = 0; k < g->size(); ++k) {
    for (int i = 0; i < m; ++i) {
      double y = u[k] - r + 2 * r * i / (m - 1);
      for (int j = 0; j < m; ++j) {
        double z1 = du.component[0][k] - r + 2 * r * j / (m - 1);
        fine = std::max(fine, 0.5 * (std::abs(std::sin(y) * z1) + 2.0 * std::abs(std::cos(y))));
      }
    }
  }
  EXPECT_NEAR(c2 / fine, 1.0, 0.05);
}

TEST(Antiderivative, CubicClosedForm) {
  auto g = [](double y) { return -y * y * y; };
  for (double y : {-2.0, -0.3, 0.0, 0.7, 3.0}) EXPECT_NEAR(antiderivative(g, y), -std::pow(y, 4) / 4, 1e-12);
}

TEST(Admissibility, CubicSignCondition) {
  auto rep = admissibility_probe(*ReactionFamily::cubic().scalar_form(), 10.0, 3);
  EXPECT_TRUE(rep.sign_condition);
}

TEST(Admissibility, PositiveCubicGrowth) {
  ScalarReaction g{[](double y) { return y * y * y; }, {}};
  auto rep = admissibility_probe(g, 10.0, 3, 4.0);
  EXPECT_FALSE(rep.sign_condition);
  EXPECT_TRUE(rep.alpha_stable);
  EXPECT_NEAR(rep.alpha_estimate, 4.0, 1e-6);
  EXPECT_DOUBLE_EQ(rep.critical_exponent, 6.0);
  EXPECT_TRUE(rep.subcritical);
  EXPECT_TRUE(rep.matches_target);
}

TEST(Admissibility, ExponentialIsFlagged) {
  ScalarReaction g{[](double y) { return std::exp(y); }, [](double y) { return std::expm1(y); }};
  auto rep = admissibility_probe(g, 5.0, 3);
  EXPECT_FALSE(rep.subcritical);
  double alpha10 = 0.0, alpha40 = 0.0;
  for (const auto& s : rep.alpha_samples) {
    if (s.y == 10.0) alpha10 = s.alpha;
    if (s.y == 40.0) alpha40 = s.alpha;
  }
  EXPECT_NEAR(alpha10, 10.0 * std::exp(10.0) / std::expm1(10.0), 1e-9);
  EXPECT_GT(alpha40, 3.0 * alpha10);
}

}  // namespace
}  // namespace linfel
