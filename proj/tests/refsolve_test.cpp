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

#include <qpinn/refsolve.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

namespace qpinn {
namespace {

constexpr double kPi = std::numbers::pi;

InitialBoundaryData heat_mode() {
  return {[](double x) { return std::sin(kPi * x); }, [](double) { return 0.0; }, 0.0, 0.0};
}

double max_error_at_end(const ReferenceSolution& coarse, const ReferenceSolution& fine) {
  double e = 0.0;
  const auto last = coarse.nt() - 1;
  for (std::size_t j = 0; j < coarse.nx(); ++j)
    e = std::max(e, std::abs(coarse.at(last, j) - sample(fine, 1.0, coarse.xs[j])));
  return e;
}

TEST(Refsolve, HeatModeAmplitude) {
  for (double L : {0.01, 0.03, 0.1, 0.3, 1.0}) {
    const auto sol = solve(L, 0.0, heat_mode(), Domain{}, SolverConfig{});
    const double want = std::exp(-L * kPi * kPi);
    EXPECT_NEAR(sample(sol, 1.0, 0.5), want, L == 0.1 ? 1e-4 : 1e-3) << "L=" << L;
    // And across the whole profile at an intermediate time.
    for (double x : {0.1, 0.3, 0.77})
      EXPECT_NEAR(sample(sol, 0.5, x), std::exp(-L * kPi * kPi * 0.5) * std::sin(kPi * x), 1e-3);
  }
  EXPECT_NEAR(std::exp(-0.1 * kPi * kPi), 0.372708, 1e-6);
}

TEST(Refsolve, ZeroDataGivesZeroSolution) {
  const InitialBoundaryData zero{[](double) { return 0.0; }, [](double) { return 0.0; }, 0, 0};
  const auto sol = solve(0.1, 1.0, zero, Domain{}, SolverConfig{65, 1e-3, 10});
  for (double v : sol.u) EXPECT_EQ(v, 0.0);
}

TEST(Refsolve, GridLayoutAndPinnedBoundaries) {
  const PdeProblem p{0.03, 1.0, BoundaryFamily::poly(), {}};
  const auto sol = solve(p, SolverConfig{129, 1e-3, 20});
  EXPECT_EQ(sol.nx(), 129u);
  EXPECT_EQ(sol.nt(), 51u);
  EXPECT_EQ(sol.times.front(), 0.0);
  EXPECT_EQ(sol.times.back(), 1.0);
  EXPECT_EQ(sol.xs[64], 0.5);
  for (std::size_t j = 0; j < sol.nx(); ++j) {
    const double ic = initial_condition(p.family, sol.xs[j]);
    if (j == 0 || j + 1 == sol.nx())
      EXPECT_EQ(sol.at(0, j), boundary_value(p.family, sol.xs[j]));
    else
      EXPECT_EQ(sol.at(0, j), ic);
  }
  for (std::size_t i = 0; i < sol.nt(); ++i) {
    EXPECT_EQ(sol.at(i, 0), boundary_value(p.family, 0.0));
    EXPECT_EQ(sol.at(i, sol.nx() - 1), boundary_value(p.family, 1.0));
  }
  EXPECT_FALSE(sol.descriptor.empty());
}

class Convergence : public ::testing::TestWithParam<std::tuple<double, double>> {};

TEST_P(Convergence, SecondOrderInSpace) {
  const auto [L, N] = GetParam();
  const PdeProblem p{L, N, BoundaryFamily::xsin(), {}};
  const auto fine = solve(p, SolverConfig{1025, 1e-4, 100});
  const auto a = solve(p, SolverConfig{129, 1e-4, 100});
  const auto b = solve(p, SolverConfig{257, 1e-4, 100});
  const double ea = max_error_at_end(a, fine), eb = max_error_at_end(b, fine);
  const double order = std::log2(ea / eb);
  EXPECT_GT(order, 1.7) << "errors " << ea << " " << eb;
  EXPECT_LT(order, 2.3) << "errors " << ea << " " << eb;
}

INSTANTIATE_TEST_SUITE_P(Refsolve, Convergence,
                         ::testing::Combine(::testing::Values(0.01, 1.0),
                                            ::testing::Values(0.0, 1.0)));

TEST(Refsolve, SamplingIsBilinear) {
  const auto sol = solve(PdeProblem{0.1, 1.0, BoundaryFamily::xsin(), {}}, SolverConfig{65, 1e-3, 10});
  EXPECT_EQ(sample(sol, sol.times[7], sol.xs[13]), sol.at(7, 13));
  EXPECT_EQ(sample(sol, 1.0, 1.0), sol.at(sol.nt() - 1, sol.nx() - 1));
  const double tm = 0.5 * (sol.times[3] + sol.times[4]), xm = 0.5 * (sol.xs[20] + sol.xs[21]);
  const double avg = 0.25 * (sol.at(3, 20) + sol.at(3, 21) + sol.at(4, 20) + sol.at(4, 21));
  EXPECT_NEAR(sample(sol, tm, xm), avg, 1e-15);
  EXPECT_THROW(sample(sol, 1.1, 0.5), StructuralError);
  EXPECT_THROW(sample(sol, 0.5, -0.01), StructuralError);
}

TEST(Refsolve, AgreesWithRefinedSolve) {
  const PdeProblem p{0.1, 1.0, BoundaryFamily::xsin(), {}};
  const auto base = solve(p, SolverConfig{});
  const auto fine = solve(p, SolverConfig{1025, 5e-5, 20});
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 1);
  for (int k = 0; k < 100; ++k) {
    const double t = u(rng), x = u(rng);
    EXPECT_NEAR(sample(base, t, x), sample(fine, t, x), 1e-3);
  }
}

TEST(Refsolve, MseExamples) {
  const auto sol = solve(PdeProblem{0.1, 0.0, BoundaryFamily::xsin(), {}}, SolverConfig{129, 1e-3, 10});
  const MseGrid grid(sol);
  EXPECT_EQ(grid.points().size(), 101u * 101u);
  EXPECT_LT(grid.mse([&](double t, double x) { return sample(sol, t, x); }), 1e-8);
  double direct = 0.0;
  for (int i = 0; i <= 100; ++i)
    for (int j = 0; j <= 100; ++j) direct += std::pow(sample(sol, i / 100.0, j / 100.0), 2);
  EXPECT_NEAR(grid.mse([](double, double) { return 0.0; }), direct / (101 * 101), 1e-14);

  const InitialBoundaryData zero{[](double) { return 0.0; }, [](double) { return 0.0; }, 0, 0};
  const MseGrid zgrid(solve(0.1, 0.0, zero, Domain{}, SolverConfig{65, 1e-2, 10}));
  EXPECT_EQ(zgrid.mse([](double, double) { return 0.0; }), 0.0);
}

TEST(Refsolve, ModelMseRoutesAgree) {
  const auto sol = solve(PdeProblem{0.1, 1.0, BoundaryFamily::xsin(), {}}, SolverConfig{129, 1e-3, 10});
  const MseGrid grid(sol);
  for (const ModelSpec& spec : {ModelSpec{dense_spec(2, 6)}, ModelSpec{hybrid_spec(1, 2)}}) {
    const ModelHandle m = make_model(spec, 3);
    const double ref = grid.mse([&](double t, double x) { return forward_value(m, t, x); });
    EXPECT_NEAR(mse(m, grid), ref, 1e-12 * std::max(1.0, ref));
    EXPECT_NEAR(mse(m, sol), ref, 1e-12 * std::max(1.0, ref));
    ModelBatch<1> b(spec, 37);
    b.bind(m.params.values);
    EXPECT_NEAR(grid.mse(b), ref, 1e-12 * std::max(1.0, ref));
  }
}

TEST(Refsolve, FileRoundTripAndCache) {
  const auto dir = std::filesystem::temp_directory_path() / "qpinn_refsolve_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const PdeProblem p{0.3, 1.0, BoundaryFamily::xsinc(2.0), {}};
  const SolverConfig c{33, 1e-2, 5};
  const auto sol = solve(p, c);
  write_reference(sol, dir / "one.bin");
  const auto back = read_reference(dir / "one.bin");
  EXPECT_EQ(back.times, sol.times);
  EXPECT_EQ(back.xs, sol.xs);
  EXPECT_EQ(back.u, sol.u);
  EXPECT_EQ(back.descriptor, sol.descriptor);

  ReferenceCache cache(dir / "cache");
  const auto first = cache.get(p, c);
  EXPECT_TRUE(std::filesystem::exists(cache.path_for(p, c)));
  const auto second = cache.get(p, c);
  EXPECT_EQ(first.u, second.u);
  EXPECT_NE(cache.path_for(p, c), cache.path_for(PdeProblem{0.3, 0.0, p.family, {}}, c));
  {
    std::ofstream(dir / "bad.bin") << "not a reference";
    EXPECT_ANY_THROW(read_reference(dir / "bad.bin"));
  }
  std::filesystem::remove_all(dir);
}

TEST(Refsolve, StabilityMonitor) {
  const InitialBoundaryData big{[](double x) { return 100.0 * std::sin(kPi * x); },
                                [](double) { return 0.0; }, 0.0, 0.0};
  EXPECT_THROW(solve(0.1, 1.0, big, Domain{}, SolverConfig{513, 1e-2, 1}), NumericalError);
  EXPECT_NO_THROW(solve(0.1, 0.0, big, Domain{}, SolverConfig{513, 1e-2, 1}));
}

TEST(Refsolve, ConfigErrors) {
  const PdeProblem p;
  EXPECT_THROW(solve(p, SolverConfig{64, 1e-3, 10}), ConfigError);
  EXPECT_THROW(solve(p, SolverConfig{3, 1e-3, 10}), ConfigError);
  EXPECT_THROW(solve(p, SolverConfig{65, 0.3, 1}), ConfigError);
  EXPECT_THROW(solve(p, SolverConfig{65, 1e-3, 7}), ConfigError);
  EXPECT_THROW(solve(PdeProblem{-0.1, 0, {}, {}}, SolverConfig{}), ConfigError);
}

}  // namespace
}  // namespace qpinn
