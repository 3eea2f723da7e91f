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
 * @file pdeset.hpp
 * @brief The PDE family u_t - L u_xx + N u u_x - F(t) = 0, its initial and
 * boundary data, and the PINN loss terms.
 *
 * Boundary data is constant in time: u(t, x_wall) = u_0(x_wall). All loss
 * terms are means over their point sets, so their scale does not depend on
 * how many collocation points are drawn.
 */

#include <qpinn/errors.hpp>
#include <qpinn/batch.hpp>
#include <qpinn/jet.hpp>
#include <qpinn/netlib.hpp>
#include <qpinn/point.hpp>
#include <qpinn/tape.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

namespace qpinn {

struct BoundaryFamily {
  enum class Kind { XSin, Poly, XSinC };
  Kind kind = Kind::XSin;
  double c = 3.0;  ///< frequency multiplier, XSinC only

  static BoundaryFamily xsin() { return {Kind::XSin, 3.0}; }
  static BoundaryFamily poly() { return {Kind::Poly, 0.0}; }
  static BoundaryFamily xsinc(double c) { return {Kind::XSinC, c}; }

  std::string name() const {
    switch (kind) {
      case Kind::XSin: return "xsin";
      case Kind::Poly: return "poly";
      case Kind::XSinC: return "xsinc";
    }
    return "?";
  }
  bool operator==(const BoundaryFamily&) const = default;
};

inline BoundaryFamily parse_family(const std::string& name, double c = 3.0) {
  if (name == "xsin") return BoundaryFamily::xsin();
  if (name == "poly") return BoundaryFamily::poly();
  if (name == "xsinc") return BoundaryFamily::xsinc(c);
  throw ConfigError("unknown boundary family '" + name + "'");
}

struct Domain {
  double t_end = 1.0;
  double x_lo = 0.0;
  double x_hi = 1.0;

  void validate() const {
    if (!(t_end > 0.0)) throw ConfigError("domain: T must be positive");
    if (!(x_lo < x_hi)) throw ConfigError("domain: need x_lo < x_hi");
  }
  bool operator==(const Domain&) const = default;
};

struct PdeProblem {
  double L = 0.1;
  double N = 0.0;
  BoundaryFamily family;
  Domain domain;

  void validate() const {
    if (!(L > 0.0)) throw ConfigError("problem: L must be positive");
    if (!std::isfinite(N)) throw ConfigError("problem: N must be finite");
    domain.validate();
  }
  /// True for the N values studied in the original experiments (0 and 1).
  bool is_standard_nonlinearity() const { return N == 0.0 || N == 1.0; }
  bool operator==(const PdeProblem&) const = default;
};

/// u(0, x).
inline double initial_condition(const BoundaryFamily& f, double x) {
  using std::numbers::pi;
  switch (f.kind) {
    case BoundaryFamily::Kind::XSin: return std::sin(3.0 * pi * x) * x;
    case BoundaryFamily::Kind::Poly:
      return 50.0 * x * (0.3 - x) * (0.6 - x) * (1.0 - x);
    case BoundaryFamily::Kind::XSinC: return std::sin(f.c * pi * x) * x;
  }
  return 0.0;
}

/// F(t).
inline double forcing(const BoundaryFamily& f, double t) {
  using std::numbers::pi;
  switch (f.kind) {
    case BoundaryFamily::Kind::XSin: return std::sin(4.0 * pi * t);
    case BoundaryFamily::Kind::Poly: return 15.0 * t * (0.4 - t) * (1.0 - t);
    case BoundaryFamily::Kind::XSinC: return std::sin(f.c * pi * t);
  }
  return 0.0;
}

/// u(t, x_wall) for x_wall in {x_lo, x_hi}; independent of t.
inline double boundary_value(const BoundaryFamily& f, double x_wall) {
  return initial_condition(f, x_wall);
}

/// u_t - L u_xx + N u u_x - F, with the forcing value F given.
inline double residual(const Jet2& u, double L, double N, double F) {
  return u.dt - L * u.dxx + N * u.v * u.dx - F;
}

/// u_t - L u_xx + N u u_x - F(t).
inline double residual(const Jet2& u, const PdeProblem& p, double t) {
  return residual(u, p.L, p.N, forcing(p.family, t));
}

/// Adjoint of residual(u) w.r.t. the jet u, scaled by rbar.
inline Jet2 residual_adjoint(const Jet2& u, const PdeProblem& p, double rbar) {
  return {rbar * p.N * u.dx, rbar, rbar * p.N * u.v, -rbar * p.L};
}

/// Interior, initial (t = 0) and spatial-boundary collocation points.
struct CollocationSet {
  std::vector<Point> interior;
  std::vector<Point> initial;
  std::vector<Point> boundary;
  bool operator==(const CollocationSet&) const = default;
};

struct CollocationView {
  std::span<const Point> interior;
  std::span<const Point> initial;
  std::span<const Point> boundary;

  CollocationView() = default;
  CollocationView(const CollocationSet& s)  // NOLINT: implicit view
      : interior(s.interior), initial(s.initial), boundary(s.boundary) {}
  CollocationView(std::span<const Point> i, std::span<const Point> t0,
                  std::span<const Point> b)
      : interior(i), initial(t0), boundary(b) {}
};

struct LossBreakdown {
  double pde = 0.0;
  double t = 0.0;
  double x = 0.0;

  double bounds() const { return t + x; }
};

inline double weighted_loss(const LossBreakdown& b, double w_bounds,
                            double w_pde) {
  if (!(w_bounds > 0.0) || !(w_pde > 0.0))
    throw ConfigError("weighted_loss: weights must be positive");
  return w_bounds * b.bounds() + w_pde * b.pde;
}

struct LossGradients {
  LossBreakdown loss;
  std::vector<double> bounds;  ///< d L_bounds / d theta
  std::vector<double> pde;     ///< d L_pde / d theta
};

/**
 * Evaluates loss terms (and their parameter gradients) for one model.
 * Interior points run on jets; initial and boundary points only need values
 * and run on plain doubles. Points are processed in blocks of `chunk`.
 */
class LossEvaluator {
 public:
  LossEvaluator(const ModelSpec& spec, const PdeProblem& problem,
                int chunk = kDefaultChunk)
      : problem_(problem),
        jet_(spec, chunk),
        val_(spec, chunk),
        chunk_(chunk),
        ubar_(4 * static_cast<std::size_t>(chunk)) {}

  void bind(std::span<const double> params) {
    jet_.bind(params);
    val_.bind(params);
    n_params_ = params.size();
  }

  LossBreakdown loss(const CollocationView& pts) {
    check(pts);
    LossBreakdown b;
    b.pde = pde_term(pts.interior, nullptr);
    b.t = data_term(pts.initial, nullptr, [&](const Point& p) {
      return initial_condition(problem_.family, p.x);
    });
    b.x = data_term(pts.boundary, nullptr, [&](const Point& p) {
      return boundary_value(problem_.family, p.x);
    });
    return b;
  }

  /// Loss terms plus separate gradients of L_bounds and L_pde.
  void loss_and_grads(const CollocationView& pts, LossGradients& out) {
    check(pts);
    out.bounds.assign(n_params_, 0.0);
    out.pde.assign(n_params_, 0.0);
    out.loss.pde = pde_term(pts.interior, &out.pde);
    out.loss.t = data_term(pts.initial, &out.bounds, [&](const Point& p) {
      return initial_condition(problem_.family, p.x);
    });
    out.loss.x = data_term(pts.boundary, &out.bounds, [&](const Point& p) {
      return boundary_value(problem_.family, p.x);
    });
  }

 private:
  static void check(const CollocationView& pts) {
    if (pts.interior.empty() || pts.initial.empty() || pts.boundary.empty())
      throw StructuralError("loss: every collocation set must be non-empty");
  }

  // Mean squared residual; with `grad`, also adds its parameter gradient.
  double pde_term(std::span<const Point> pts, std::vector<double>* grad) {
    const double inv_n = 1.0 / static_cast<double>(pts.size());
    const double L = problem_.L, N = problem_.N;
    double sum = 0.0;
    for (std::size_t lo = 0; lo < pts.size(); lo += chunk_) {
      const auto blk = pts.subspan(lo, std::min<std::size_t>(chunk_, pts.size() - lo));
      const int P = static_cast<int>(blk.size());
      const auto u = jet_.forward(blk);
      for (int p = 0; p < P; ++p) {
        const double uv = u[p], ut = u[P + p], ux = u[2 * P + p], uxx = u[3 * P + p];
        const double r = ut - L * uxx + N * uv * ux - forcing(problem_.family, blk[p].t);
        sum += r * r;
        if (grad) {
          const double rb = 2.0 * r * inv_n;
          ubar_[p] = rb * N * ux;
          ubar_[P + p] = rb;
          ubar_[2 * P + p] = rb * N * uv;
          ubar_[3 * P + p] = -rb * L;
        }
      }
      if (grad) jet_.backward(ubar_, *grad);
    }
    return sum * inv_n;
  }

  template <class Target>
  double data_term(std::span<const Point> pts, std::vector<double>* grad,
                   Target&& target) {
    const double inv_n = 1.0 / static_cast<double>(pts.size());
    double sum = 0.0;
    for (std::size_t lo = 0; lo < pts.size(); lo += chunk_) {
      const auto blk = pts.subspan(lo, std::min<std::size_t>(chunk_, pts.size() - lo));
      const auto u = val_.forward(blk);
      for (std::size_t p = 0; p < blk.size(); ++p) {
        const double d = u[p] - target(blk[p]);
        sum += d * d;
        ubar_[p] = 2.0 * d * inv_n;
      }
      if (grad) val_.backward(ubar_, *grad);
    }
    return sum * inv_n;
  }

  PdeProblem problem_;
  ModelBatch<4> jet_;
  ModelBatch<1> val_;
  std::size_t chunk_;
  std::size_t n_params_ = 0;
  std::vector<double> ubar_;
};

/// Loss terms of an arbitrary field u(t, x), given as a callable taking the
/// seeded jets (t, x) and returning the jet of u. Straight per-point sums;
/// this is the reference the batched evaluator is checked against.
template <class Field>
  requires std::is_invocable_r_v<Jet2, Field, const Jet2&, const Jet2&>
LossBreakdown loss_terms(Field&& u, const PdeProblem& problem,
                         const CollocationView& pts) {
  if (pts.interior.empty() || pts.initial.empty() || pts.boundary.empty())
    throw StructuralError("loss: every collocation set must be non-empty");
  LossBreakdown b;
  for (const Point& p : pts.interior) {
    const double r = residual(u(Jet2::seed_t(p.t), Jet2::seed_x(p.x)), problem, p.t);
    b.pde += r * r;
  }
  for (const Point& p : pts.initial) {
    const double d = u(Jet2(p.t), Jet2(p.x)).v - initial_condition(problem.family, p.x);
    b.t += d * d;
  }
  for (const Point& p : pts.boundary) {
    const double d = u(Jet2(p.t), Jet2(p.x)).v - boundary_value(problem.family, p.x);
    b.x += d * d;
  }
  b.pde /= static_cast<double>(pts.interior.size());
  b.t /= static_cast<double>(pts.initial.size());
  b.x /= static_cast<double>(pts.boundary.size());
  return b;
}

inline LossBreakdown loss_terms(const ModelHandle& model,
                                const PdeProblem& problem,
                                const CollocationView& pts) {
  LossEvaluator ev(model.spec, problem);
  ev.bind(model.params.values);
  return ev.loss(pts);
}

/// Weighted loss recorded on a tape; the slow but independent route used to
/// cross-check LossEvaluator gradients.
inline Var weighted_loss_on_tape(Tape& tape, const ModelSpec& spec,
                                 std::span<const Var> params,
                                 const PdeProblem& problem,
                                 const CollocationView& pts, double w_bounds,
                                 double w_pde) {
  Var pde = tape.constant(0.0);
  for (const Point& p : pts.interior) {
    const Var t = tape.constant(Jet2::seed_t(p.t));
    const Var x = tape.constant(Jet2::seed_x(p.x));
    const Var u = forward_generic<Var>(spec, params, t, x);
    const Var ut = tape.component(u, JetComponent::Dt);
    const Var uxx = tape.component(u, JetComponent::Dxx);
    const Var ux = tape.component(u, JetComponent::Dx);
    const Var uv = tape.component(u, JetComponent::Value);
    const Var r = ut - problem.L * uxx + problem.N * (uv * ux) -
                  forcing(problem.family, p.t);
    pde = pde + r * r;
  }
  Var bounds = tape.constant(0.0);
  auto data_term = [&](std::span<const Point> set, auto target) {
    Var acc = tape.constant(0.0);
    for (const Point& p : set) {
      const Var u = forward_generic<Var>(spec, params, tape.constant(p.t),
                                         tape.constant(p.x));
      const Var d = tape.component(u, JetComponent::Value) - target(p);
      acc = acc + d * d;
    }
    return acc * (1.0 / static_cast<double>(set.size()));
  };
  bounds = data_term(pts.initial, [&](const Point& p) {
             return initial_condition(problem.family, p.x);
           }) +
           data_term(pts.boundary, [&](const Point& p) {
             return boundary_value(problem.family, p.x);
           });
  pde = pde * (1.0 / static_cast<double>(pts.interior.size()));
  return w_bounds * bounds + w_pde * pde;
}

}  // namespace qpinn
