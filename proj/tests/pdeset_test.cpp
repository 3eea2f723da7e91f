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

#include <qpinn/netlib.hpp>
#include <qpinn/pdeset.hpp>
#include <qpinn/sampler.hpp>
#include <qpinn/tape.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

namespace qpinn {
namespace {

constexpr double kPi = std::numbers::pi;

TEST(Pdeset, InitialConditionExamples) {
  EXPECT_EQ(initial_condition(BoundaryFamily::xsin(), 0.0), 0.0);
  EXPECT_EQ(initial_condition(BoundaryFamily::poly(), 0.3), 0.0);
  EXPECT_NEAR(initial_condition(BoundaryFamily::xsin(), 0.5), -0.5, 1e-15);
  EXPECT_NEAR(initial_condition(BoundaryFamily::xsinc(2.0), 0.25), 0.25, 1e-15);
  EXPECT_NEAR(initial_condition(BoundaryFamily::poly(), 0.5), 50 * 0.5 * -0.2 * 0.1 * 0.5, 1e-15);
}

TEST(Pdeset, ForcingExamples) {
  EXPECT_NEAR(forcing(BoundaryFamily::xsin(), 0.25), 0.0, 1e-15);
  EXPECT_EQ(forcing(BoundaryFamily::poly(), 0.4), 0.0);
  EXPECT_NEAR(forcing(BoundaryFamily::poly(), 0.2), 0.48, 1e-15);
  EXPECT_NEAR(forcing(BoundaryFamily::xsinc(1.0), 0.5), 1.0, 1e-15);
}

TEST(Pdeset, BoundaryValuesFollowTheInitialCondition) {
  for (auto f : {BoundaryFamily::xsin(), BoundaryFamily::poly(), BoundaryFamily::xsinc(5)}) {
    EXPECT_EQ(boundary_value(f, 0.0), initial_condition(f, 0.0));
    EXPECT_EQ(boundary_value(f, 1.0), initial_condition(f, 1.0));
  }
}

TEST(Pdeset, FamilyNames) {
  EXPECT_EQ(parse_family("xsin"), BoundaryFamily::xsin());
  EXPECT_EQ(parse_family("xsinc", 7).c, 7.0);
  EXPECT_EQ(parse_family("poly").name(), "poly");
  EXPECT_THROW(parse_family("sine"), ConfigError);
}

TEST(Pdeset, ResidualExamples) {
  EXPECT_EQ(residual(Jet2(2.5), 0.1, 1.0, 0.0), 0.0);
  for (double x : {-0.3, 0.0, 0.6}) EXPECT_EQ(residual(Jet2::seed_x(x), 0.1, 1.0, 0.0), x);
  // u = a + b x solves the heat equation; with N = 0 the residual vanishes.
  const Jet2 lin = 0.7 + 2.0 * Jet2::seed_x(0.4);
  EXPECT_NEAR(residual(lin, 0.3, 0.0, 0.0), 0.0, 1e-15);
}

TEST(Pdeset, HeatModeHasZeroResidual) {
  for (double L : {0.001, 0.01, 0.1, 1.0}) {
    for (double t : {0.0, 0.3, 0.9})
      for (double x : {0.1, 0.45, 0.8}) {
        const Jet2 T = Jet2::seed_t(t), X = Jet2::seed_x(x);
        const Jet2 u = exp(-L * kPi * kPi * T) * sin(kPi * X);
        EXPECT_NEAR(residual(u, L, 0.0, 0.0), 0.0, 1e-12);
      }
  }
}

TEST(Pdeset, WeightedLossExamples) {
  LossBreakdown b;
  b.t = 0.06;
  b.x = 0.04;
  b.pde = 0.4;
  EXPECT_DOUBLE_EQ(b.bounds(), 0.1);
  EXPECT_NEAR(weighted_loss(b, 2.0, 0.5), 0.4, 1e-15);
  EXPECT_DOUBLE_EQ(weighted_loss(b, 1.0, 1.0), 0.5);
  EXPECT_EQ(weighted_loss(LossBreakdown{}, 3.0, 4.0), 0.0);
  EXPECT_THROW(weighted_loss(b, 0.0, 1.0), ConfigError);
  EXPECT_THROW(weighted_loss(b, 1.0, -1.0), ConfigError);
}

TEST(Pdeset, ZeroFieldLossIsDirectSum) {
  PdeProblem p{0.1, 1.0, BoundaryFamily::xsin(), {}};
  const auto [train, val] = sample_sets(64, 3);
  const auto zero = [](const Jet2&, const Jet2&) { return Jet2(0.0); };
  const LossBreakdown b = loss_terms(zero, p, train);
  double lt = 0, lx = 0, lp = 0;
  for (const auto& q : train.initial) lt += std::pow(q.x * std::sin(3 * kPi * q.x), 2);
  for (const auto& q : train.boundary) lx += std::pow(q.x * std::sin(3 * kPi * q.x), 2);
  for (const auto& q : train.interior) lp += std::pow(std::sin(4 * kPi * q.t), 2);
  EXPECT_NEAR(b.t, lt / 64, 1e-15);
  EXPECT_NEAR(b.x, lx / 64, 1e-15);
  EXPECT_NEAR(b.pde, lp / 64, 1e-15);
  EXPECT_EQ(b.bounds(), b.t + b.x);
}

TEST(Pdeset, ExactFieldGivesZeroLoss) {
  // With c = 0 the XSinC family has zero data and zero forcing, so u = 0 is exact.
  PdeProblem p{0.05, 1.0, BoundaryFamily::xsinc(0.0), {}};
  const auto [train, val] = sample_sets(32, 1);
  const auto b = loss_terms([](const Jet2&, const Jet2&) { return Jet2(0.0); }, p, train);
  EXPECT_EQ(b.pde, 0.0);
  EXPECT_EQ(b.bounds(), 0.0);
}

TEST(Pdeset, BatchedLossMatchesPerPointReference) {
  std::mt19937_64 rng(2);
  const auto [train, val] = sample_sets(128, 9);
  for (const ModelSpec& spec : {ModelSpec{dense_spec(3, 6)}, ModelSpec{hybrid_spec(1, 4)}})
    for (auto fam : {BoundaryFamily::xsin(), BoundaryFamily::poly(), BoundaryFamily::xsinc(2)}) {
      const PdeProblem p{0.02, 1.0, fam, {}};
      const ModelHandle m = make_model(spec, rng());
      const auto ref = loss_terms(
          [&](const Jet2& t, const Jet2& x) { return forward(m, t, x); }, p, val);
      const auto got = loss_terms(m, p, val);
      EXPECT_NEAR(got.pde, ref.pde, 1e-12 * std::max(1.0, ref.pde));
      EXPECT_NEAR(got.t, ref.t, 1e-13);
      EXPECT_NEAR(got.x, ref.x, 1e-13);
      EXPECT_GE(got.pde, 0.0);
    }
}

TEST(Pdeset, DuplicatingPointsLeavesMeansUnchanged) {
  const auto [train, val] = sample_sets(64, 4);
  CollocationSet twice = train;
  for (auto* v : {&twice.interior, &twice.initial, &twice.boundary}) {
    const auto copy = *v;
    v->insert(v->end(), copy.begin(), copy.end());
  }
  const ModelHandle m = make_model(dense_spec(2, 5), 3);
  const PdeProblem p{0.1, 1.0, BoundaryFamily::xsin(), {}};
  const auto a = loss_terms(m, p, train), b = loss_terms(m, p, twice);
  EXPECT_NEAR(a.pde, b.pde, 1e-14);
  EXPECT_NEAR(a.t, b.t, 1e-14);
  EXPECT_NEAR(a.x, b.x, 1e-14);
}

TEST(Pdeset, SplitGradientsMatchTape) {
  const auto [train, val] = sample_sets(16, 2);
  for (const ModelSpec& spec : {ModelSpec{dense_spec(2, 4)}, ModelSpec{hybrid_spec(0, 2)}}) {
    const ModelHandle m = make_model(spec, 6);
    const PdeProblem p{0.07, 0.5, BoundaryFamily::poly(), {}};
    LossEvaluator ev(spec, p, 5);  // odd chunk exercises partial blocks
    ev.bind(m.params.values);
    LossGradients g;
    ev.loss_and_grads(train, g);

    for (auto [wb, wp] : {std::pair{1.0, 0.0}, std::pair{0.0, 1.0}}) {
      Tape tape;
      const auto ps = tape.params(m.params);
      // A zero weight isolates one term; weighted_loss_on_tape itself has no sign check.
      const Var l = weighted_loss_on_tape(tape, spec, ps, p, train, wb, wp);
      const Gradient ref = tape.grad(l, m.params.size());
      const auto& got = wb > 0 ? g.bounds : g.pde;
      for (std::size_t i = 0; i < got.size(); ++i)
        EXPECT_NEAR(got[i], ref[i], 1e-10 * std::max(1.0, std::abs(ref[i])));
    }
  }
}

TEST(Pdeset, EmptySetsAreRejected) {
  const ModelHandle m = make_model(dense_spec(1, 3), 1);
  const PdeProblem p;
  CollocationSet s = sample_sets(8, 1).first;
  s.boundary.clear();
  EXPECT_THROW(loss_terms(m, p, s), StructuralError);
  EXPECT_THROW(loss_terms([](const Jet2&, const Jet2&) { return Jet2(0.0); }, p, s),
               StructuralError);
}

TEST(Pdeset, ProblemValidation) {
  EXPECT_THROW((PdeProblem{0.0, 1.0, {}, {}}.validate()), ConfigError);
  EXPECT_THROW((PdeProblem{0.1, NAN, {}, {}}.validate()), ConfigError);
  EXPECT_THROW((PdeProblem{0.1, 1.0, {}, {1.0, 1.0, 0.0}}.validate()), ConfigError);
  EXPECT_NO_THROW((PdeProblem{0.1, 0.5, {}, {}}.validate()));
  EXPECT_FALSE((PdeProblem{0.1, 0.5, {}, {}}.is_standard_nonlinearity()));
}

}  // namespace
}  // namespace qpinn
