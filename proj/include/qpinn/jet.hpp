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
 * @file jet.hpp
 * @brief Second-order jets in two input variables (t, x).
 *
 * A Jet2 carries a value together with the coefficients u_t, u_x and u_xx.
 * Mixed and second t-derivatives are never needed by the residual and are
 * truncated away, which makes the algebra
 *
 *     R[e_t, e_x] / (e_t^2, e_t e_x, e_x^3)
 *
 * with dxx stored as the *second derivative* (twice the e_x^2 coefficient).
 * The product rule for dxx therefore reads a.dxx b + 2 a.dx b.dx + a b.dxx.
 */

#include <cmath>

namespace qpinn {

struct Jet2 {
  double v = 0.0;
  double dt = 0.0;
  double dx = 0.0;
  double dxx = 0.0;

  constexpr Jet2() = default;
  constexpr Jet2(double value) : v(value) {}  // NOLINT: constant lift
  constexpr Jet2(double value, double d_t, double d_x, double d_xx)
      : v(value), dt(d_t), dx(d_x), dxx(d_xx) {}

  static constexpr Jet2 constant(double c) { return {c, 0.0, 0.0, 0.0}; }
  static constexpr Jet2 seed_t(double t) { return {t, 1.0, 0.0, 0.0}; }
  static constexpr Jet2 seed_x(double x) { return {x, 0.0, 1.0, 0.0}; }

  constexpr bool operator==(const Jet2&) const = default;

  constexpr Jet2& operator+=(const Jet2& o) {
    v += o.v;
    dt += o.dt;
    dx += o.dx;
    dxx += o.dxx;
    return *this;
  }
  constexpr Jet2& operator-=(const Jet2& o) {
    v -= o.v;
    dt -= o.dt;
    dx -= o.dx;
    dxx -= o.dxx;
    return *this;
  }
  constexpr Jet2& operator*=(double k) {
    v *= k;
    dt *= k;
    dx *= k;
    dxx *= k;
    return *this;
  }
};

constexpr Jet2 operator+(Jet2 a, const Jet2& b) { return a += b; }
constexpr Jet2 operator-(Jet2 a, const Jet2& b) { return a -= b; }
constexpr Jet2 operator-(const Jet2& a) { return {-a.v, -a.dt, -a.dx, -a.dxx}; }
constexpr Jet2 operator*(Jet2 a, double k) { return a *= k; }
constexpr Jet2 operator*(double k, Jet2 a) { return a *= k; }

constexpr Jet2 operator*(const Jet2& a, const Jet2& b) {
  return {a.v * b.v, a.dt * b.v + a.v * b.dt, a.dx * b.v + a.v * b.dx,
          a.dxx * b.v + 2.0 * a.dx * b.dx + a.v * b.dxx};
}

inline bool isfinite(const Jet2& a) {
  return std::isfinite(a.v) && std::isfinite(a.dt) && std::isfinite(a.dx) &&
         std::isfinite(a.dxx);
}

/// Sum over components of the elementwise product; the adjoint pairing.
constexpr double dot(const Jet2& a, const Jet2& b) {
  return a.v * b.v + a.dt * b.dt + a.dx * b.dx + a.dxx * b.dxx;
}

/// Chain rule for a scalar function with first and second derivative f1, f2
/// evaluated at a.v.
constexpr Jet2 chain(const Jet2& a, double f0, double f1, double f2) {
  return {f0, f1 * a.dt, f1 * a.dx, f1 * a.dxx + f2 * a.dx * a.dx};
}

inline Jet2 tanh(const Jet2& a) {
  const double y = std::tanh(a.v);
  const double s = 1.0 - y * y;
  return chain(a, y, s, -2.0 * y * s);
}

inline Jet2 sin(const Jet2& a) {
  const double s = std::sin(a.v);
  const double c = std::cos(a.v);
  return chain(a, s, c, -s);
}

inline Jet2 cos(const Jet2& a) {
  const double s = std::sin(a.v);
  const double c = std::cos(a.v);
  return chain(a, c, -s, -c);
}

inline Jet2 exp(const Jet2& a) {
  const double e = std::exp(a.v);
  return chain(a, e, e, e);
}

// ---------------------------------------------------------------------------
// Adjoint helpers. For y = c * a the reverse sweep needs the transpose of the
// linear map a -> c * a (operand adjoint) and of c -> c * a (coefficient
// adjoint). With plain doubles both collapse to ordinary products.

/// Operand adjoint of y = c * a given ybar.
constexpr Jet2 mul_adjoint(const Jet2& ybar, const Jet2& c) {
  return {ybar.v * c.v + ybar.dt * c.dt + ybar.dx * c.dx + ybar.dxx * c.dxx,
          ybar.dt * c.v, ybar.dx * c.v + 2.0 * ybar.dxx * c.dx,
          ybar.dxx * c.v};
}
constexpr Jet2 mul_adjoint(const Jet2& ybar, double c) { return ybar * c; }
constexpr double mul_adjoint(double ybar, double c) { return ybar * c; }

/// Coefficient adjoint of y = c * a for a real coefficient c.
constexpr double coef_adjoint(const Jet2& ybar, const Jet2& a) {
  return dot(ybar, a);
}
constexpr double coef_adjoint(double ybar, double a) { return ybar * a; }

/// Reverse rule for y = f(a), given f', f'', f''' at a.v.
constexpr Jet2 chain_adjoint(const Jet2& ybar, const Jet2& a, double f1,
                             double f2, double f3) {
  return {ybar.v * f1 + ybar.dt * f2 * a.dt + ybar.dx * f2 * a.dx +
              ybar.dxx * (f2 * a.dxx + f3 * a.dx * a.dx),
          ybar.dt * f1, ybar.dx * f1 + 2.0 * ybar.dxx * f2 * a.dx,
          ybar.dxx * f1};
}
constexpr double chain_adjoint(double ybar, double, double f1, double,
                               double) {
  return ybar * f1;
}

/// Reverse rule for y = tanh(a) given the forward output y.
template <class S>
constexpr S tanh_adjoint(const S& ybar, const S& a, double y) {
  const double f1 = 1.0 - y * y;
  const double f2 = -2.0 * y * f1;
  const double f3 = -2.0 * f1 * f1 + 4.0 * y * y * f1;
  return chain_adjoint(ybar, a, f1, f2, f3);
}

inline double value_of(double a) { return a; }
inline double value_of(const Jet2& a) { return a.v; }

}  // namespace qpinn
