// Copyright 2026 The qpinn-lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <qpinn/jet.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

namespace qpinn {
namespace {

void expect_jet_near(const Jet2& got, const Jet2& want, double tol) {
  EXPECT_NEAR(got.v, want.v, tol);
  EXPECT_NEAR(got.dt, want.dt, tol);
  EXPECT_NEAR(got.dx, want.dx, tol);
  EXPECT_NEAR(got.dxx, want.dxx, tol);
}

TEST(Jet, ConstantAndSeeds) {
  EXPECT_EQ(Jet2::constant(3.5), Jet2(3.5, 0, 0, 0));
  EXPECT_EQ(Jet2::seed_t(0.2), Jet2(0.2, 1, 0, 0));
  EXPECT_EQ(Jet2::seed_x(0.7), Jet2(0.7, 0, 1, 0));
  EXPECT_EQ(Jet2(2.0), Jet2::constant(2.0));
}

TEST(Jet, ProductRuleByHand) {
  const Jet2 a{2, 1, 0, 0}, b{3, 0, 1, 0};
  EXPECT_EQ(a * b, Jet2(6, 3, 2, 0));
  // A second-order cross term only appears with two x-dependent factors.
  const Jet2 c{2, 1, 1, 0};
  EXPECT_EQ(c * b, Jet2(6, 3, 5, 2));
}

TEST(Jet, ConstantScaling) {
  EXPECT_EQ(Jet2::constant(5) * Jet2::seed_x(2), Jet2(10, 0, 5, 0));
  EXPECT_EQ(Jet2::seed_x(2) * 5.0, Jet2(10, 0, 5, 0));
}

TEST(Jet, SquareOfX) {
  const Jet2 x = Jet2::seed_x(1.5);
  EXPECT_EQ(x * x, Jet2(2.25, 0, 3, 2));
}

TEST(Jet, AddSubNegate) {
  const Jet2 a{1, 2, 3, 4}, b{0.5, -1, 2, -3};
  EXPECT_EQ(a + b, Jet2(1.5, 1, 5, 1));
  EXPECT_EQ(a - b, Jet2(0.5, 3, 1, 7));
  EXPECT_EQ(-a, Jet2(-1, -2, -3, -4));
}

TEST(Jet, TanhExamples) {
  expect_jet_near(tanh(Jet2{0, 1, 1, 0}), {0, 1, 1, 0}, 1e-15);
  const Jet2 sat = tanh(Jet2{10, 0, 1, 0});
  EXPECT_NEAR(sat.v, 1.0, 1e-8);
  EXPECT_NEAR(sat.dx, 0.0, 1e-8);
  EXPECT_NEAR(sat.dxx, 0.0, 1e-7);
  const double y = std::tanh(0.5);
  const double closed = -2.0 * y * (1.0 - y * y);
  EXPECT_NEAR(tanh(Jet2{0.5, 0, 1, 0}).dxx, closed, 1e-15);
  EXPECT_NEAR(closed, -0.72686, 1e-5);
}

TEST(Jet, SinCosExamples) {
  expect_jet_near(sin(Jet2{0, 1, 0, 0}), {0, 1, 0, 0}, 1e-15);
  expect_jet_near(cos(Jet2{0, 0, 1, 0}), {1, 0, 0, -1}, 1e-15);
  expect_jet_near(sin(Jet2{std::numbers::pi / 2, 0, 1, 0}), {1, 0, 0, -1}, 1e-15);
}

// d/dx and d2/dx2 of f(g(x)) against finite differences of the composition.
TEST(Jet, ChainRuleAgainstFiniteDifferences) {
  const auto g = [](double x) { return 0.3 + 1.7 * x - 0.9 * x * x; };
  const auto f = [&](double x) { return std::sin(std::tanh(g(x))); };
  const double x0 = 0.37, h = 1e-4;
  const Jet2 x = Jet2::seed_x(x0);
  const Jet2 inner = Jet2::constant(0.3) + x * 1.7 - x * x * 0.9;
  const Jet2 u = sin(tanh(inner));
  EXPECT_NEAR(u.v, f(x0), 1e-15);
  EXPECT_NEAR(u.dx, (f(x0 + h) - f(x0 - h)) / (2 * h), 1e-7);
  EXPECT_NEAR(u.dxx, (f(x0 + h) - 2 * f(x0) + f(x0 - h)) / (h * h), 1e-5);
}

// (a0 + a1 t + a2 x)(b0 + b1 t + b2 x) + c0 + c1 x^2, expanded by hand.
TEST(Jet, RandomQuadraticsMatchHandExpansion) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int rep = 0; rep < 20; ++rep) {
    const double a0 = u(rng), a1 = u(rng), a2 = u(rng);
    const double b0 = u(rng), b1 = u(rng), b2 = u(rng);
    const double c0 = u(rng), c1 = u(rng);
    const double t0 = u(rng), x0 = u(rng);
    const Jet2 t = Jet2::seed_t(t0), x = Jet2::seed_x(x0);
    const Jet2 A = Jet2::constant(a0) + t * a1 + x * a2;
    const Jet2 B = Jet2::constant(b0) + t * b1 + x * b2;
    const Jet2 e = A * B + Jet2::constant(c0) + (x * x) * c1;
    const double Av = a0 + a1 * t0 + a2 * x0, Bv = b0 + b1 * t0 + b2 * x0;
    const Jet2 want{Av * Bv + c0 + c1 * x0 * x0, a1 * Bv + Av * b1,
                    a2 * Bv + Av * b2 + 2 * c1 * x0, 2 * a2 * b2 + 2 * c1};
    expect_jet_near(e, want, 1e-12);
  }
}

TEST(Jet, StaysFiniteOnBoundedInputs) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int rep = 0; rep < 1000; ++rep) {
    const Jet2 a{u(rng), u(rng), u(rng), u(rng)}, b{u(rng), u(rng), u(rng), u(rng)};
    EXPECT_TRUE(isfinite(tanh(a * b) + sin(a) * cos(b) - exp(Jet2(0.1) * a)));
  }
  EXPECT_FALSE(isfinite(Jet2{NAN, 0, 0, 0}));
}

TEST(Jet, MultiplyAdjointIsTransposeOfProduct) {
  // <ybar, a*c> is linear in a; its gradient w.r.t. a is mul_adjoint(ybar, c).
  const Jet2 a{0.3, -1.2, 0.8, 2.0}, c{1.1, 0.4, -0.7, 0.25}, yb{0.6, -0.2, 0.9, 1.3};
  const Jet2 g = mul_adjoint(yb, c);
  const double base = dot(yb, a * c);
  const double h = 1e-6;
  double* comps[4];
  Jet2 p = a;
  comps[0] = &p.v;
  comps[1] = &p.dt;
  comps[2] = &p.dx;
  comps[3] = &p.dxx;
  const double want[4] = {g.v, g.dt, g.dx, g.dxx};
  for (int k = 0; k < 4; ++k) {
    p = a;
    *comps[k] += h;
    EXPECT_NEAR((dot(yb, p * c) - base) / h, want[k], 1e-8);
  }
}

}  // namespace
}  // namespace qpinn
