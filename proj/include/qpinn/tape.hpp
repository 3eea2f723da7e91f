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

#pragma once

/**
 * @file tape.hpp
 * @brief Reverse-mode tape over Jet2-valued nodes.
 *
 * Every recorded node holds a full jet, and the reverse sweep carries a
 * four-component adjoint per node. A loss built from jet components (for
 * example the squared PDE residual, which reads u.dt and u.dxx) therefore
 * differentiates through the input derivatives as well as the value.
 *
 * A tape is append-only and single-threaded. Operands always precede their
 * consumers, so a single backward pass in reverse index order is exact.
 */

#include <qpinn/errors.hpp>
#include <qpinn/jet.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace qpinn {

/// Trainable parameters; the identifier of a parameter is its index.
struct ParamVector {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
};

/// Per-parameter partials aligned with a ParamVector.
struct Gradient {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
};

class Tape;

/// Handle to a node on a tape.
struct Var {
  Tape* tape = nullptr;
  std::uint32_t index = 0;

  const Jet2& jet() const;
  double value() const { return jet().v; }
};

enum class JetComponent : std::uint8_t { Value, Dt, Dx, Dxx };

class Tape {
 public:
  enum class Op : std::uint8_t {
    Leaf,
    Add,
    Sub,
    Mul,
    Scale,
    Shift,
    Tanh,
    Sin,
    Cos,
    Component,
  };

  struct Node {
    Op op = Op::Leaf;
    std::uint8_t component = 0;
    std::uint32_t a = 0;
    std::uint32_t b = 0;
    double k = 0.0;
    Jet2 val;
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  void reserve(std::size_t n) { nodes_.reserve(n); }
  std::size_t size() const { return nodes_.size(); }
  const Node& node(std::size_t i) const { return nodes_.at(i); }

  Var constant(const Jet2& c) { return push({Op::Leaf, 0, 0, 0, 0.0, c}); }
  Var constant(double c) { return constant(Jet2::constant(c)); }

  /// Records parameter `id` as a leaf. Re-registering an id is an error.
  Var param(std::size_t id, double value) {
    if (id >= param_nodes_.size()) param_nodes_.resize(id + 1, kUnset);
    if (param_nodes_[id] != kUnset)
      throw StructuralError("tape: parameter id registered twice");
    Var v = constant(value);
    param_nodes_[id] = v.index;
    return v;
  }

  /// Registers every entry of `params` and returns the leaves in order.
  std::vector<Var> params(const ParamVector& params) {
    std::vector<Var> out;
    out.reserve(params.size());
    for (std::size_t i = 0; i < params.size(); ++i)
      out.push_back(param(i, params[i]));
    return out;
  }

  Var add(Var a, Var b) {
    check(a, b);
    return push({Op::Add, 0, a.index, b.index, 0.0, at(a) + at(b)});
  }
  Var sub(Var a, Var b) {
    check(a, b);
    return push({Op::Sub, 0, a.index, b.index, 0.0, at(a) - at(b)});
  }
  Var mul(Var a, Var b) {
    check(a, b);
    return push({Op::Mul, 0, a.index, b.index, 0.0, at(a) * at(b)});
  }
  Var scale(Var a, double k) {
    check(a);
    return push({Op::Scale, 0, a.index, 0, k, at(a) * k});
  }
  Var shift(Var a, double c) {
    check(a);
    Jet2 y = at(a);
    y.v += c;
    return push({Op::Shift, 0, a.index, 0, c, y});
  }
  Var tanh(Var a) {
    check(a);
    return push({Op::Tanh, 0, a.index, 0, 0.0, qpinn::tanh(at(a))});
  }
  Var sin(Var a) {
    check(a);
    return push({Op::Sin, 0, a.index, 0, 0.0, qpinn::sin(at(a))});
  }
  Var cos(Var a) {
    check(a);
    return push({Op::Cos, 0, a.index, 0, 0.0, qpinn::cos(at(a))});
  }

  /// Lifts one jet coefficient of `a` into the value slot of a new node,
  /// (c, 0, 0, 0). This is how a loss reads u.dt, u.dx or u.dxx.
  Var component(Var a, JetComponent which) {
    check(a);
    const Jet2& j = at(a);
    double c = 0.0;
    switch (which) {
      case JetComponent::Value: c = j.v; break;
      case JetComponent::Dt: c = j.dt; break;
      case JetComponent::Dx: c = j.dx; break;
      case JetComponent::Dxx: c = j.dxx; break;
    }
    return push({Op::Component, static_cast<std::uint8_t>(which), a.index, 0,
                 0.0, Jet2::constant(c)});
  }

  /// Reverse sweep seeded with adjoint `seed` at `root`. Returns the adjoint
  /// of every node.
  std::vector<Jet2> adjoints(Var root, const Jet2& seed = Jet2(1.0)) const {
    if (root.tape != this || root.index >= nodes_.size())
      throw StructuralError("tape: dangling root reference");
    std::vector<Jet2> bar(root.index + 1);
    bar[root.index] = seed;
    for (std::size_t i = root.index + 1; i-- > 0;) {
      const Node& n = nodes_[i];
      const Jet2& yb = bar[i];
      switch (n.op) {
        case Op::Leaf:
          break;
        case Op::Add:
          bar[n.a] += yb;
          bar[n.b] += yb;
          break;
        case Op::Sub:
          bar[n.a] += yb;
          bar[n.b] -= yb;
          break;
        case Op::Mul:
          bar[n.a] += mul_adjoint(yb, nodes_[n.b].val);
          bar[n.b] += mul_adjoint(yb, nodes_[n.a].val);
          break;
        case Op::Scale:
          bar[n.a] += yb * n.k;
          break;
        case Op::Shift:
          bar[n.a] += yb;
          break;
        case Op::Tanh:
          bar[n.a] += tanh_adjoint(yb, nodes_[n.a].val, n.val.v);
          break;
        case Op::Sin: {
          const double x = nodes_[n.a].val.v;
          const double s = std::sin(x), c = std::cos(x);
          bar[n.a] += chain_adjoint(yb, nodes_[n.a].val, c, -s, -c);
          break;
        }
        case Op::Cos: {
          const double x = nodes_[n.a].val.v;
          const double s = std::sin(x), c = std::cos(x);
          bar[n.a] += chain_adjoint(yb, nodes_[n.a].val, -s, -c, s);
          break;
        }
        case Op::Component:
          switch (static_cast<JetComponent>(n.component)) {
            case JetComponent::Value: bar[n.a].v += yb.v; break;
            case JetComponent::Dt: bar[n.a].dt += yb.v; break;
            case JetComponent::Dx: bar[n.a].dx += yb.v; break;
            case JetComponent::Dxx: bar[n.a].dxx += yb.v; break;
          }
          break;
      }
    }
    return bar;
  }

  /// d(loss.v)/d(theta) for every registered parameter, in id order.
  Gradient grad(Var loss, std::size_t n_params) const {
    if (n_params > param_nodes_.size())
      throw StructuralError("tape: gradient requested for unregistered params");
    const std::vector<Jet2> bar = adjoints(loss);
    Gradient g;
    g.values.assign(n_params, 0.0);
    for (std::size_t i = 0; i < n_params; ++i) {
      const std::uint32_t node = param_nodes_[i];
      if (node == kUnset)
        throw StructuralError("tape: parameter id never registered");
      if (node < bar.size()) g.values[i] = bar[node].v;
    }
    return g;
  }

  const Jet2& at(Var a) const { return nodes_[a.index].val; }

 private:
  static constexpr std::uint32_t kUnset = 0xffffffffu;

  Var push(const Node& n) {
    nodes_.push_back(n);
    return {this, static_cast<std::uint32_t>(nodes_.size() - 1)};
  }
  void check(Var a) const {
    if (a.tape != this || a.index >= nodes_.size())
      throw StructuralError("tape: dangling operand reference");
  }
  void check(Var a, Var b) const {
    check(a);
    check(b);
  }

  const Jet2& at(std::uint32_t i) const { return nodes_[i].val; }

  std::vector<Node> nodes_;
  std::vector<std::uint32_t> param_nodes_;
};

inline const Jet2& Var::jet() const { return tape->at(*this); }

inline Var operator+(Var a, Var b) { return a.tape->add(a, b); }
inline Var operator-(Var a, Var b) { return a.tape->sub(a, b); }
inline Var operator*(Var a, Var b) { return a.tape->mul(a, b); }
inline Var operator*(Var a, double k) { return a.tape->scale(a, k); }
inline Var operator*(double k, Var a) { return a.tape->scale(a, k); }
inline Var operator+(Var a, double c) { return a.tape->shift(a, c); }
inline Var operator+(double c, Var a) { return a.tape->shift(a, c); }
inline Var operator-(Var a, double c) { return a.tape->shift(a, -c); }
inline Var operator-(Var a) { return a.tape->scale(a, -1.0); }
inline Var& operator+=(Var& a, Var b) { return a = a + b; }
inline Var tanh(Var a) { return a.tape->tanh(a); }
inline Var sin(Var a) { return a.tape->sin(a); }
inline Var cos(Var a) { return a.tape->cos(a); }
inline double value_of(const Var& a) { return a.value(); }

// Constant lifting for code templated on the scalar carrier.
inline double lift(double, double c) { return c; }
inline Jet2 lift(const Jet2&, double c) { return Jet2::constant(c); }
inline Var lift(const Var& like, double c) { return like.tape->constant(c); }

/// Largest relative disagreement between `analytic` and a central
/// difference of `f`, |a - fd| / max(1, |a|), over all coordinates.
inline double check_grad(const std::function<double(const ParamVector&)>& f,
                         const Gradient& analytic, const ParamVector& params,
                         double step) {
  if (analytic.size() != params.size())
    throw StructuralError("check_grad: gradient/parameter length mismatch");
  double worst = 0.0;
  ParamVector probe = params;
  for (std::size_t i = 0; i < params.size(); ++i) {
    probe[i] = params[i] + step;
    const double fp = f(probe);
    probe[i] = params[i] - step;
    const double fm = f(probe);
    probe[i] = params[i];
    const double fd = (fp - fm) / (2.0 * step);
    const double err =
        std::abs(analytic[i] - fd) / std::max(1.0, std::abs(analytic[i]));
    worst = std::max(worst, err);
  }
  return worst;
}

/// Tape-recorded scalar function of the parameters.
using TapeFunction = std::function<Var(Tape&, std::span<const Var>)>;

/// Gradient of `f` at `params` by one reverse sweep.
inline Gradient grad(const TapeFunction& f, const ParamVector& params) {
  Tape tape;
  const std::vector<Var> leaves = tape.params(params);
  const Var loss = f(tape, leaves);
  return tape.grad(loss, params.size());
}

/// Value of `f` at `params` (forward only).
inline double evaluate(const TapeFunction& f, const ParamVector& params) {
  Tape tape;
  const std::vector<Var> leaves = tape.params(params);
  return f(tape, leaves).value();
}

/// Tape gradient of `f` checked against central differences of its value.
inline double check_grad(const TapeFunction& f, const ParamVector& params,
                         double step) {
  return check_grad([&](const ParamVector& p) { return evaluate(f, p); },
                    grad(f, params), params, step);
}

}  // namespace qpinn
