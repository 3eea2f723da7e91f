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

#include <qpinn/batch.hpp>
#include <qpinn/netlib.hpp>
#include <qpinn/tape.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

namespace qpinn {
namespace {

// Plain scalar evaluation of a dense tanh net; weights row-major per layer,
// followed by the layer's biases.
double scalar_dense(const std::vector<int>& w, const double* p, std::vector<double> a) {
  for (std::size_t l = 0; l + 1 < w.size(); ++l) {
    std::vector<double> z(w[l + 1]);
    const double* bias = p + w[l] * w[l + 1];
    for (int i = 0; i < w[l + 1]; ++i) {
      double s = bias[i];
      for (int j = 0; j < w[l]; ++j) s += p[i * w[l] + j] * a[j];
      z[i] = l + 2 < w.size() ? std::tanh(s) : s;
    }
    p = bias + w[l + 1];
    a = z;
  }
  return a[0];
}

TEST(Netlib, CountExamples) {
  EXPECT_EQ(count_params(DenseSpec{{2, 3}}), 9);
  EXPECT_EQ(count_params(DenseSpec{{2, 6, 3}}), 39);
  EXPECT_EQ(count_params(DenseSpec{{3, 6, 1}}), 31);
  EXPECT_EQ(count_params(hybrid_spec(1, 0)), 70);
  EXPECT_EQ(count_params(hybrid_spec(1, 30)), 250);
  EXPECT_EQ(count_params(hybrid_spec(0, 0)), 13);
}

TEST(Netlib, PlanCpinnExamples) {
  EXPECT_EQ(plan_cpinn(100, 2).widths, (std::vector<int>{2, 8, 8, 1}));
  EXPECT_EQ(count_params(plan_cpinn(100, 2)), 105);
  EXPECT_EQ(count_params(dense_spec(2, 7)), 85);
  EXPECT_EQ(plan_cpinn(9, 1).widths, (std::vector<int>{2, 2, 1}));
  const int exact = count_params(dense_spec(3, 5));
  EXPECT_EQ(count_params(plan_cpinn(exact, 3)), exact);
  EXPECT_THROW(plan_cpinn(100, 0), ConfigError);
  EXPECT_THROW(plan_cpinn(3, 2), ConfigError);
}

TEST(Netlib, PlanCpinnIsOptimalOverWidths) {
  for (int target : {100, 150, 200, 250})
    for (int depth = 1; depth <= 6; ++depth) {
      const DenseSpec s = plan_cpinn(target, depth);
      const int gap = std::abs(count_params(s) - target);
      const int chosen = s.widths[1];
      for (int w = 1; w <= 64; ++w) {
        const int g = std::abs(count_params(dense_spec(depth, w)) - target);
        EXPECT_GE(g, gap) << "T=" << target << " depth=" << depth << " w=" << w;
        if (g == gap) EXPECT_GE(w, chosen);  // ties resolved to the smaller width
      }
    }
}

TEST(Netlib, PlanQpinnExamples) {
  const HybridSpec a = plan_qpinn(250, 1);
  EXPECT_EQ(a.circuit.depth, 30);
  EXPECT_EQ(count_params(a), 250);
  const HybridSpec b = plan_qpinn(150, 1);
  EXPECT_EQ(b.circuit.depth, 13);
  EXPECT_EQ(count_params(b), 148);
  // 87 / 6 = 14.5 exactly: the tie goes to the smaller depth.
  const HybridSpec c = plan_qpinn(100, 0);
  EXPECT_EQ(c.circuit.depth, 14);
  EXPECT_EQ(count_params(c), 97);
  EXPECT_EQ(plan_qpinn(16, 0).circuit.depth, 1);
  EXPECT_THROW(plan_qpinn(13, 0), ConfigError);
  EXPECT_THROW(plan_qpinn(60, 1), ConfigError);
  EXPECT_THROW(hybrid_spec(2, 3), ConfigError);
}

TEST(Netlib, HybridShapes) {
  const HybridSpec h = hybrid_spec(1, 4, EncodingSchedule::BothAxes);
  EXPECT_EQ(h.encoder.widths, (std::vector<int>{2, 6, 3}));
  EXPECT_EQ(h.decoder.widths, (std::vector<int>{3, 6, 1}));
  EXPECT_EQ(h.circuit.n_qubits, 3);
  EXPECT_EQ(h.circuit.encoding, EncodingSchedule::BothAxes);
  HybridSpec bad = h;
  bad.decoder.widths = {2, 1};
  EXPECT_THROW(validate(ModelSpec{bad}), StructuralError);
  EXPECT_THROW(validate(ModelSpec{DenseSpec{{2}}}), StructuralError);
}

TEST(Netlib, InitIsDeterministicWithZeroBiases) {
  const ModelSpec spec = dense_spec(3, 7);
  const auto a = init_params(spec, 4), b = init_params(spec, 4), c = init_params(spec, 5);
  EXPECT_EQ(a.values, b.values);
  EXPECT_NE(a.values, c.values);
  const auto& w = std::get<DenseSpec>(spec).widths;
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < w.size(); ++l) {
    const double lim = std::sqrt(6.0 / (w[l] + w[l + 1]));
    for (int i = 0; i < w[l] * w[l + 1]; ++i) EXPECT_LE(std::abs(a.values[off++]), lim);
    for (int i = 0; i < w[l + 1]; ++i) EXPECT_EQ(a.values[off++], 0.0);
  }
  EXPECT_EQ(off, a.values.size());

  const HybridSpec h = hybrid_spec(0, 5);
  const auto hp = init_params(h, 11);
  for (int k = 0; k < 15; ++k) {
    const double th = hp.values[9 + k];
    EXPECT_GE(th, 0.0);
    EXPECT_LT(th, 2 * std::numbers::pi);
  }
}

TEST(Netlib, ZeroWeightExamples) {
  ModelHandle d = make_model(dense_spec(2, 5), 1);
  std::fill(d.params.values.begin(), d.params.values.end(), 0.0);
  const Jet2 u = forward(d, Jet2::seed_t(0.3), Jet2::seed_x(0.7));
  EXPECT_EQ(u.v, 0.0);
  EXPECT_EQ(u.dt, 0.0);
  EXPECT_EQ(u.dx, 0.0);
  EXPECT_EQ(u.dxx, 0.0);

  ModelHandle h = make_model(hybrid_spec(1, 3), 2);
  const int nd = count_params(std::get<HybridSpec>(h.spec).decoder);
  auto& p = h.params.values;
  std::fill(p.end() - nd, p.end(), 0.0);
  p.back() = 0.42;  // decoder output bias
  const Jet2 v = forward(h, Jet2::seed_t(0.1), Jet2::seed_x(-0.4));
  EXPECT_EQ(v.v, 0.42);
  EXPECT_EQ(v.dt, 0.0);
  EXPECT_EQ(v.dx, 0.0);
  EXPECT_EQ(v.dxx, 0.0);
}

TEST(Netlib, ForwardMatchesScalarOracle) {
  const ModelHandle m = make_model(plan_cpinn(250, 3), 7, 250);
  const auto& w = std::get<DenseSpec>(m.spec).widths;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int k = 0; k < 5; ++k) {
    const double t = 0.5 * (u(rng) + 1), x = u(rng);
    EXPECT_NEAR(forward_value(m, t, x), scalar_dense(w, m.params.values.data(), {t, x}), 1e-12);
    EXPECT_NEAR(forward(m, Jet2::seed_t(t), Jet2::seed_x(x)).v,
                scalar_dense(w, m.params.values.data(), {t, x}), 1e-12);
  }
}

TEST(Netlib, JetDerivativesMatchFiniteDifferences) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-1, 1);
  const std::vector<ModelHandle> models{make_model(dense_spec(2, 9), 1),
                                        make_model(hybrid_spec(0, 4), 2),
                                        make_model(hybrid_spec(1, 6, EncodingSchedule::BothAxes), 3)};
  const double h = 1e-4;
  for (const auto& m : models)
    for (int k = 0; k < 20; ++k) {
      const double t = 0.5 * (u(rng) + 1), x = u(rng);
      const Jet2 j = forward(m, Jet2::seed_t(t), Jet2::seed_x(x));
      const double f0 = forward_value(m, t, x);
      const double ft = (forward_value(m, t + h, x) - forward_value(m, t - h, x)) / (2 * h);
      const double fp = forward_value(m, t, x + h), fm = forward_value(m, t, x - h);
      const double fx = (fp - fm) / (2 * h), fxx = (fp - 2 * f0 + fm) / (h * h);
      auto rel = [](double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); };
      EXPECT_LT(rel(j.v, f0), 1e-12);
      EXPECT_LT(rel(j.dt, ft), 1e-5);
      EXPECT_LT(rel(j.dx, fx), 1e-5);
      EXPECT_LT(rel(j.dxx, fxx), 1e-5);
    }
}

TEST(Netlib, ForwardIsPure) {
  const ModelHandle m = make_model(hybrid_spec(1, 2), 9);
  const Jet2 a = forward(m, Jet2::seed_t(0.2), Jet2::seed_x(0.3));
  forward(m, Jet2::seed_t(0.9), Jet2::seed_x(-0.8));
  const Jet2 b = forward(m, Jet2::seed_t(0.2), Jet2::seed_x(0.3));
  EXPECT_EQ(a.v, b.v);
  EXPECT_EQ(a.dxx, b.dxx);
}

TEST(Netlib, KernelMatchesGenericAndTape) {
  for (const ModelSpec& spec : {ModelSpec{dense_spec(2, 5)}, ModelSpec{hybrid_spec(1, 3)}}) {
    const ModelHandle m = make_model(spec, 21);
    ModelKernel<Jet2> k(spec);
    k.bind(m.params.values);
    const Jet2 t = Jet2::seed_t(0.4), x = Jet2::seed_x(0.25);
    const Jet2 u = k.forward(t, x);
    const Jet2 ref = forward(m, t, x);
    EXPECT_NEAR(u.v, ref.v, 1e-14);
    EXPECT_NEAR(u.dxx, ref.dxx, 1e-12);

    const Jet2 ubar{0.3, -1.2, 0.8, 0.5};
    std::vector<double> grad(m.params.size(), 0.0);
    k.backward(ubar, grad);

    Tape tape;
    const auto ps = tape.params(m.params);
    const Var vu = forward_generic<Var>(spec, ps, tape.constant(t), tape.constant(x));
    const Var loss = tape.component(vu, JetComponent::Value) * ubar.v +
                     tape.component(vu, JetComponent::Dt) * ubar.dt +
                     tape.component(vu, JetComponent::Dx) * ubar.dx +
                     tape.component(vu, JetComponent::Dxx) * ubar.dxx;
    const Gradient g = tape.grad(loss, m.params.size());
    for (std::size_t i = 0; i < grad.size(); ++i) EXPECT_NEAR(grad[i], g[i], 1e-11);
  }
}

}  // namespace
}  // namespace qpinn
