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
 * @file batch.hpp
 * @brief Model evaluation over a block of collocation points at once.
 *
 * This is the training hot path. It computes exactly what ModelKernel
 * computes point by point, laid out for SIMD:
 *
 *  - A quantity with K lanes (K = 1: value only, K = 4: jet {v, dt, dx, dxx})
 *    over P points is a row of K*P doubles, lane-major: lane k of point p
 *    lives at column k*P + p.
 *  - Every jet lane is linear in the layer weights, so a dense layer over
 *    all lanes and points is a single matrix product W * A. The bias only
 *    touches the value lane.
 *  - The circuit state keeps one row per (amplitude, re/im). CNOTs only
 *    permute an index table. The reverse sweep recovers each pre-gate state
 *    by applying the inverse gate, so no per-gate history is stored.
 */

#include <qpinn/errors.hpp>
#include <qpinn/netlib.hpp>
#include <qpinn/point.hpp>
#include <qpinn/qsim.hpp>

#include <Eigen/Core>

#include <cmath>
#include <numeric>
#include <span>
#include <vector>

namespace qpinn {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr int kDefaultChunk = 128;

namespace lanes {

template <int K>
struct Lane {
  double c[K];
};

template <int K>
inline Lane<K> load(const double* base, int stride, int p) {
  Lane<K> a;
#pragma GCC unroll 4
  for (int k = 0; k < K; ++k) a.c[k] = base[k * stride + p];
  return a;
}

template <int K>
inline void store(double* base, int stride, int p, const Lane<K>& a) {
#pragma GCC unroll 4
  for (int k = 0; k < K; ++k) base[k * stride + p] = a.c[k];
}

template <int K>
inline Lane<K> operator+(const Lane<K>& a, const Lane<K>& b) {
  Lane<K> r;
#pragma GCC unroll 4
  for (int k = 0; k < K; ++k) r.c[k] = a.c[k] + b.c[k];
  return r;
}

template <int K>
inline Lane<K> operator-(const Lane<K>& a, const Lane<K>& b) {
  Lane<K> r;
#pragma GCC unroll 4
  for (int k = 0; k < K; ++k) r.c[k] = a.c[k] - b.c[k];
  return r;
}

template <int K>
inline Lane<K> operator*(double s, const Lane<K>& a) {
  Lane<K> r;
#pragma GCC unroll 4
  for (int k = 0; k < K; ++k) r.c[k] = s * a.c[k];
  return r;
}

template <int K>
inline Lane<K> operator*(const Lane<K>& a, const Lane<K>& b) {
  if constexpr (K == 1) {
    return {{a.c[0] * b.c[0]}};
  } else {
    return {{a.c[0] * b.c[0], a.c[1] * b.c[0] + a.c[0] * b.c[1],
             a.c[2] * b.c[0] + a.c[0] * b.c[2],
             a.c[3] * b.c[0] + 2.0 * a.c[2] * b.c[2] + a.c[0] * b.c[3]}};
  }
}

/// Adjoint of y = a * c with respect to a.
template <int K>
inline Lane<K> mul_adj(const Lane<K>& yb, const Lane<K>& c) {
  if constexpr (K == 1) {
    return {{yb.c[0] * c.c[0]}};
  } else {
    return {{yb.c[0] * c.c[0] + yb.c[1] * c.c[1] + yb.c[2] * c.c[2] + yb.c[3] * c.c[3],
             yb.c[1] * c.c[0], yb.c[2] * c.c[0] + 2.0 * yb.c[3] * c.c[2],
             yb.c[3] * c.c[0]}};
  }
}

/// y = f(a) given f, f', f'' at a.v.
template <int K>
inline Lane<K> apply(const Lane<K>& a, double f0, double f1, double f2) {
  if constexpr (K == 1) {
    return {{f0}};
  } else {
    return {{f0, f1 * a.c[1], f1 * a.c[2], f1 * a.c[3] + f2 * a.c[2] * a.c[2]}};
  }
}

/// Adjoint of y = f(a) with respect to a, given f', f'', f''' at a.v.
template <int K>
inline Lane<K> chain_adj(const Lane<K>& yb, const Lane<K>& a, double f1, double f2,
                         double f3) {
  if constexpr (K == 1) {
    return {{yb.c[0] * f1}};
  } else {
    return {{yb.c[0] * f1 + yb.c[1] * f2 * a.c[1] + yb.c[2] * f2 * a.c[2] +
                 yb.c[3] * (f2 * a.c[3] + f3 * a.c[2] * a.c[2]),
             yb.c[1] * f1, yb.c[2] * f1 + 2.0 * yb.c[3] * f2 * a.c[2], yb.c[3] * f1}};
  }
}

template <int K>
inline double dot(const Lane<K>& a, const Lane<K>& b) {
  double s = 0.0;
#pragma GCC unroll 4
  for (int k = 0; k < K; ++k) s += a.c[k] * b.c[k];
  return s;
}

}  // namespace lanes

/// Dense tanh network over a block of points.
template <int K>
class DenseBatch {
 public:
  DenseBatch(const DenseSpec& spec, int max_points) : spec_(spec) {
    validate(spec_);
    const std::size_t n = spec_.widths.size();
    acts_.resize(n);
    pre_.resize(n);
    bars_.resize(n);
    for (std::size_t l = 0; l < n; ++l) {
      acts_[l].setZero(spec_.widths[l], K * max_points);
      pre_[l].setZero(spec_.widths[l], K * max_points);
      bars_[l].setZero(spec_.widths[l], K * max_points);
    }
  }

  /// `in` holds widths[0] rows; only the first K*P columns are read.
  const RowMat& forward(std::span<const double> params, const RowMat& in, int P) {
    P_ = P;
    const int C = K * P;
    acts_[0].leftCols(C) = in.leftCols(C);
    std::size_t off = 0;
    const std::size_t layers = spec_.widths.size() - 1;
    for (std::size_t l = 0; l < layers; ++l) {
      const int nin = spec_.widths[l], nout = spec_.widths[l + 1];
      Eigen::Map<const RowMat> W(params.data() + off, nout, nin);
      Eigen::Map<const Eigen::VectorXd> b(params.data() + off + std::size_t(nin) * nout,
                                          nout);
      auto Z = pre_[l + 1].leftCols(C);
      Z.noalias() = W * acts_[l].leftCols(C);
      Z.leftCols(P).colwise() += b;
      if (l + 1 < layers)
        tanh_forward(l + 1);
      else
        acts_[l + 1].leftCols(C) = Z;
      off += std::size_t(nin + 1) * nout;
    }
    return acts_.back();
  }

  /// Reverse sweep after forward(); adds into `grad`, writes `in_bar`.
  void backward(std::span<const double> params, const RowMat& out_bar,
                std::span<double> grad, RowMat& in_bar) {
    const int P = P_, C = K * P;
    const std::size_t layers = spec_.widths.size() - 1;
    bars_[layers].leftCols(C) = out_bar.leftCols(C);
    std::size_t off = static_cast<std::size_t>(count_params(spec_));
    for (std::size_t l = layers; l-- > 0;) {
      const int nin = spec_.widths[l], nout = spec_.widths[l + 1];
      off -= std::size_t(nin + 1) * nout;
      Eigen::Map<const RowMat> W(params.data() + off, nout, nin);
      Eigen::Map<RowMat> gW(grad.data() + off, nout, nin);
      Eigen::Map<Eigen::VectorXd> gb(grad.data() + off + std::size_t(nin) * nout, nout);
      if (l + 1 < layers) tanh_backward(l + 1);
      const auto Zb = bars_[l + 1].leftCols(C);
      gW.noalias() += Zb * acts_[l].leftCols(C).transpose();
      gb += Zb.leftCols(P).rowwise().sum();
      bars_[l].leftCols(C).noalias() = W.transpose() * Zb;
    }
    in_bar.leftCols(C) = bars_[0].leftCols(C);
  }

 private:
  void tanh_forward(std::size_t l) {
    const int P = P_;
    const Eigen::Index stride = pre_[l].cols();
    for (int r = 0; r < spec_.widths[l]; ++r) {
      const double* z = pre_[l].data() + r * stride;
      double* y = acts_[l].data() + r * stride;
      // tanh of the value lane, via the vectorised exp: with e = exp(-2|z|),
      // tanh z = sign(z) (1 - e) / (1 + e). The absolute error stays at
      // rounding level; std::tanh here would dominate the whole pass.
      Eigen::Map<const Eigen::ArrayXd> zv(z, P);
      Eigen::Map<Eigen::ArrayXd> tv(y, P);
      tv = (-2.0 * zv.abs()).exp();
      tv = zv.sign() * (1.0 - tv) / (1.0 + tv);
#pragma omp simd
      for (int p = 0; p < P; ++p) {
        const auto a = lanes::load<K>(z, P, p);
        const double t = y[p];
        const double s = 1.0 - t * t;
        lanes::store<K>(y, P, p, lanes::apply<K>(a, t, s, -2.0 * t * s));
      }
    }
  }

  // bars_[l] holds d/d(activation) on entry and d/d(pre-activation) on exit.
  void tanh_backward(std::size_t l) {
    const int P = P_;
    const Eigen::Index stride = pre_[l].cols();
    for (int r = 0; r < spec_.widths[l]; ++r) {
      const double* z = pre_[l].data() + r * stride;
      const double* y = acts_[l].data() + r * stride;
      double* b = bars_[l].data() + r * stride;
#pragma omp simd
      for (int p = 0; p < P; ++p) {
        const auto a = lanes::load<K>(z, P, p);
        const auto yb = lanes::load<K>(b, P, p);
        const double t = y[p];
        const double s = 1.0 - t * t;
        const double f2 = -2.0 * t * s;
        const double f3 = -2.0 * s * s + 4.0 * t * t * s;
        lanes::store<K>(b, P, p, lanes::chain_adj<K>(yb, a, s, f2, f3));
      }
    }
  }

  DenseSpec spec_;
  int P_ = 0;
  std::vector<RowMat> acts_, pre_, bars_;
};

/// The re-uploading circuit over a block of points.
template <int K>
class CircuitBatch {
 public:
  CircuitBatch(const CircuitLayout& layout, int max_points)
      : layout_(layout),
        gates_(compile(layout)),
        dim_(1 << layout.n_qubits),
        psi_(std::size_t(dim_) * 2 * K * max_points),
        bar_(psi_.size()),
        slot_(dim_),
        cs_(layout.trainable_angles()) {
    const int nq = layout.n_qubits;
    half_.setZero(nq, K * max_points);
    cos_.setZero(nq, K * max_points);
    sin_.setZero(nq, K * max_points);
    cbar_.setZero(nq, K * max_points);
    sbar_.setZero(nq, K * max_points);
  }

  void bind(std::span<const double> thetas) {
    if (thetas.size() != cs_.size())
      throw StructuralError("circuit batch: trainable angle count mismatch");
    for (std::size_t k = 0; k < thetas.size(); ++k)
      cs_[k] = {std::cos(0.5 * thetas[k]), std::sin(0.5 * thetas[k])};
  }

  /// `in` and `out` have one row per qubit.
  void forward(const RowMat& in, RowMat& out, int P) {
    P_ = P;
    const int nq = layout_.n_qubits;
    for (int j = 0; j < nq; ++j) {
      const double* i = in.data() + j * in.cols();
      double* h = half_.data() + j * half_.cols();
      double* c = cos_.data() + j * cos_.cols();
      double* s = sin_.data() + j * sin_.cols();
      for (int p = 0; p < P; ++p) {
        const auto hj = 0.5 * lanes::load<K>(i, P, p);
        const double sv = std::sin(hj.c[0]), cv = std::cos(hj.c[0]);
        lanes::store<K>(h, P, p, hj);
        lanes::store<K>(c, P, p, lanes::apply<K>(hj, cv, -sv, -cv));
        lanes::store<K>(s, P, p, lanes::apply<K>(hj, sv, cv, -sv));
      }
    }
    std::fill(psi_.begin(), psi_.begin() + std::size_t(dim_) * 2 * K * P, 0.0);
    std::iota(slot_.begin(), slot_.end(), 0);
    std::fill(amp(0, 0), amp(0, 0) + P, 1.0);
    for (const Gate& g : gates_) {
      switch (g.kind) {
        case Gate::Kind::EncodeRotation:
          dispatch(g.axis, [&]<Axis A>() { rotate_jet<A>(g.qubit, row(cos_, g.source), row(sin_, g.source), false); });
          break;
        case Gate::Kind::TrainedRotation: {
          const auto cs = cs_[g.source];
          dispatch(g.axis, [&]<Axis A>() { rotate_scalar<A>(g.qubit, cs.c, cs.s); });
          break;
        }
        case Gate::Kind::Cnot:
          cnot(g);
          break;
      }
    }
    for (int q = 0; q < nq; ++q) {
      double* o = out.data() + q * out.cols();
      std::fill(o, o + K * P, 0.0);
    }
    for (int i = 0; i < dim_; ++i) {
      const double* re = amp(slot_[i], 0);
      const double* im = amp(slot_[i], 1);
      for (int q = 0; q < nq; ++q) {
        double* o = out.data() + q * out.cols();
        const double sg = (i >> q) & 1 ? -1.0 : 1.0;
#pragma omp simd
        for (int p = 0; p < P; ++p) {
          const auto a = lanes::load<K>(re, P, p);
          const auto b = lanes::load<K>(im, P, p);
          const auto z = lanes::load<K>(o, P, p);
          lanes::store<K>(o, P, p, z + sg * (a * a + b * b));
        }
      }
    }
  }

  /// Reverse sweep after forward(). Writes `in_bar` (one row per qubit)
  /// and adds trainable-angle adjoints into `thetas_bar`. Consumes the
  /// stored final state.
  void backward(const RowMat& out_bar, RowMat& in_bar, std::span<double> thetas_bar) {
    const int P = P_, nq = layout_.n_qubits;
    for (int i = 0; i < dim_; ++i) {
      const double* re = amp(slot_[i], 0);
      const double* im = amp(slot_[i], 1);
      double* bre = adj(slot_[i], 0);
      double* bim = adj(slot_[i], 1);
      std::fill(bre, bre + K * P, 0.0);
      std::fill(bim, bim + K * P, 0.0);
      for (int q = 0; q < nq; ++q) {
        const double* zb = out_bar.data() + q * out_bar.cols();
        const double sg = (i >> q) & 1 ? -2.0 : 2.0;
#pragma omp simd
        for (int p = 0; p < P; ++p) {
          const auto z = lanes::load<K>(zb, P, p);
          lanes::store<K>(bre, P, p,
                          lanes::load<K>(bre, P, p) +
                              sg * lanes::mul_adj<K>(z, lanes::load<K>(re, P, p)));
          lanes::store<K>(bim, P, p,
                          lanes::load<K>(bim, P, p) +
                              sg * lanes::mul_adj<K>(z, lanes::load<K>(im, P, p)));
        }
      }
    }
    cbar_.leftCols(K * P).setZero();
    sbar_.leftCols(K * P).setZero();
    for (std::size_t gi = gates_.size(); gi-- > 0;) {
      const Gate& g = gates_[gi];
      switch (g.kind) {
        case Gate::Kind::EncodeRotation:
          dispatch(g.axis, [&]<Axis A>() {
            rotate_jet_backward<A>(g.qubit, row(cos_, g.source), row(sin_, g.source),
                                   row(cbar_, g.source), row(sbar_, g.source));
          });
          break;
        case Gate::Kind::TrainedRotation: {
          const auto cs = cs_[g.source];
          double cb = 0.0, sb = 0.0;
          dispatch(g.axis, [&]<Axis A>() { rotate_scalar_backward<A>(g.qubit, cs.c, cs.s, cb, sb); });
          thetas_bar[g.source] += 0.5 * (cs.c * sb - cs.s * cb);
          break;
        }
        case Gate::Kind::Cnot:
          cnot(g);
          break;
      }
    }
    for (int j = 0; j < nq; ++j) {
      const double* h = row(half_, j);
      const double* cb = row(cbar_, j);
      const double* sb = row(sbar_, j);
      double* ib = in_bar.data() + j * in_bar.cols();
      for (int p = 0; p < P; ++p) {
        const auto hj = lanes::load<K>(h, P, p);
        const double sv = std::sin(hj.c[0]), cv = std::cos(hj.c[0]);
        const auto hb =
            lanes::chain_adj<K>(lanes::load<K>(cb, P, p), hj, -sv, -cv, sv) +
            lanes::chain_adj<K>(lanes::load<K>(sb, P, p), hj, cv, -sv, -cv);
        lanes::store<K>(ib, P, p, 0.5 * hb);
      }
    }
  }

 private:
  struct CosSin {
    double c = 1.0;
    double s = 0.0;
  };

  template <class F>
  static void dispatch(Axis axis, F&& f) {
    switch (axis) {
      case Axis::X: f.template operator()<Axis::X>(); break;
      case Axis::Y: f.template operator()<Axis::Y>(); break;
      case Axis::Z: f.template operator()<Axis::Z>(); break;
    }
  }

  double* amp(int slot, int ri) {
    return psi_.data() + (std::size_t(slot) * 2 + ri) * K * P_;
  }
  double* adj(int slot, int ri) {
    return bar_.data() + (std::size_t(slot) * 2 + ri) * K * P_;
  }
  static double* row(RowMat& m, int r) { return m.data() + r * m.cols(); }

  void cnot(const Gate& g) {
    const int cb = 1 << g.qubit, tb = 1 << g.target;
    for (int i = 0; i < dim_; ++i)
      if ((i & cb) && !(i & tb)) std::swap(slot_[i], slot_[i | tb]);
  }

  // Four real components of an amplitude pair: (a0.re, a0.im, a1.re, a1.im).
  void pair_components(int i0, int bit, double* v[4]) {
    v[0] = amp(slot_[i0], 0);
    v[1] = amp(slot_[i0], 1);
    v[2] = amp(slot_[i0 | bit], 0);
    v[3] = amp(slot_[i0 | bit], 1);
  }
  void pair_adjoints(int i0, int bit, double* b[4]) {
    b[0] = adj(slot_[i0], 0);
    b[1] = adj(slot_[i0], 1);
    b[2] = adj(slot_[i0 | bit], 0);
    b[3] = adj(slot_[i0 | bit], 1);
  }

  template <Axis A>
  void rotate_scalar(int qubit, double c, double s) {
    constexpr auto pat = detail::rotation_pattern(A);
    const int bit = 1 << qubit, P = P_;
    for (int i0 = 0; i0 < dim_; ++i0) {
      if (i0 & bit) continue;
      double* v[4];
      pair_components(i0, bit, v);
#pragma omp simd
      for (int p = 0; p < K * P; ++p) {
        double x[4], w[4];
#pragma GCC unroll 4
        for (int j = 0; j < 4; ++j) x[j] = v[j][p];
#pragma GCC unroll 4
        for (int j = 0; j < 4; ++j) w[j] = c * x[j] + pat.sign[j] * s * x[pat.partner[j]];
#pragma GCC unroll 4
        for (int j = 0; j < 4; ++j) v[j][p] = w[j];
      }
    }
  }

  template <Axis A>
  void rotate_scalar_backward(int qubit, double c, double s, double& cbar,
                              double& sbar) {
    constexpr auto pat = detail::rotation_pattern(A);
    const int bit = 1 << qubit, P = P_;
    double cb = 0.0, sb = 0.0;
    for (int i0 = 0; i0 < dim_; ++i0) {
      if (i0 & bit) continue;
      double* v[4];
      double* b[4];
      pair_components(i0, bit, v);
      pair_adjoints(i0, bit, b);
#pragma omp simd reduction(+ : cb, sb)
      for (int p = 0; p < K * P; ++p) {
        double w[4], wb[4], x[4];
#pragma GCC unroll 4
        for (int j = 0; j < 4; ++j) {
          w[j] = v[j][p];
          wb[j] = b[j][p];
        }
#pragma GCC unroll 4
        for (int j = 0; j < 4; ++j) x[j] = c * w[j] - pat.sign[j] * s * w[pat.partner[j]];
#pragma GCC unroll 4
        for (int j = 0; j < 4; ++j) {
          const int q = pat.partner[j];
          v[j][p] = x[j];
          b[j][p] = c * wb[j] + pat.sign[q] * s * wb[q];
          cb += wb[j] * x[j];
          sb += pat.sign[j] * wb[j] * x[q];
        }
      }
    }
    cbar += cb;
    sbar += sb;
  }

  template <Axis A>
  void rotate_jet(int qubit, const double* c, const double* s, bool inverse) {
    constexpr auto pat = detail::rotation_pattern(A);
    const int bit = 1 << qubit, P = P_;
    const double sdir = inverse ? -1.0 : 1.0;
    for (int i0 = 0; i0 < dim_; ++i0) {
      if (i0 & bit) continue;
      double* v[4];
      pair_components(i0, bit, v);
#pragma omp simd
      for (int p = 0; p < P; ++p) {
        const auto cc = lanes::load<K>(c, P, p);
        const auto ss = sdir * lanes::load<K>(s, P, p);
        lanes::Lane<K> x[4];
#pragma GCC unroll 4
        for (int j = 0; j < 4; ++j) x[j] = lanes::load<K>(v[j], P, p);
#pragma GCC unroll 4
        for (int j = 0; j < 4; ++j)
          lanes::store<K>(v[j], P, p, cc * x[j] + pat.sign[j] * (ss * x[pat.partner[j]]));
      }
    }
  }

  template <Axis A>
  void rotate_jet_backward(int qubit, const double* c, const double* s, double* cbar,
                           double* sbar) {
    constexpr auto pat = detail::rotation_pattern(A);
    const int bit = 1 << qubit, P = P_;
    for (int i0 = 0; i0 < dim_; ++i0) {
      if (i0 & bit) continue;
      double* v[4];
      double* b[4];
      pair_components(i0, bit, v);
      pair_adjoints(i0, bit, b);
#pragma omp simd
      for (int p = 0; p < P; ++p) {
        const auto cc = lanes::load<K>(c, P, p);
        const auto ss = lanes::load<K>(s, P, p);
        lanes::Lane<K> w[4], wb[4], x[4];
#pragma GCC unroll 4
        for (int j = 0; j < 4; ++j) {
          w[j] = lanes::load<K>(v[j], P, p);
          wb[j] = lanes::load<K>(b[j], P, p);
        }
#pragma GCC unroll 4
        for (int j = 0; j < 4; ++j)
          x[j] = cc * w[j] - pat.sign[j] * (ss * w[pat.partner[j]]);
        auto cb = lanes::load<K>(cbar, P, p);
        auto sb = lanes::load<K>(sbar, P, p);
#pragma GCC unroll 4
        for (int j = 0; j < 4; ++j) {
          const int q = pat.partner[j];
          lanes::store<K>(v[j], P, p, x[j]);
          lanes::store<K>(b[j], P, p,
                          lanes::mul_adj<K>(wb[j], cc) +
                              pat.sign[q] * lanes::mul_adj<K>(wb[q], ss));
          cb = cb + lanes::mul_adj<K>(wb[j], x[j]);
          sb = sb + pat.sign[j] * lanes::mul_adj<K>(wb[j], x[q]);
        }
        lanes::store<K>(cbar, P, p, cb);
        lanes::store<K>(sbar, P, p, sb);
      }
    }
  }

  CircuitLayout layout_;
  std::vector<Gate> gates_;
  int dim_;
  int P_ = 0;
  std::vector<double> psi_, bar_;
  std::vector<int> slot_;
  std::vector<CosSin> cs_;
  RowMat half_, cos_, sin_, cbar_, sbar_;
};

/**
 * Whole-model evaluation over up to `max_points` points per call.
 * forward() returns u as K*P lane-major values; backward(ubar) adds the
 * parameter adjoint of sum_p <ubar_p, u_p> into `grad`.
 */
template <int K>
class ModelBatch {
 public:
  explicit ModelBatch(const ModelSpec& spec, int max_points = kDefaultChunk)
      : spec_(spec), max_(max_points) {
    validate(spec_);
    if (max_points < 1) throw StructuralError("model batch: empty block");
    in_.setZero(2, K * max_);
    in_bar_.setZero(2, K * max_);
    u_bar_.setZero(1, K * max_);
    if (const auto* d = std::get_if<DenseSpec>(&spec_)) {
      dense_.emplace_back(*d, max_);
    } else {
      const auto& h = std::get<HybridSpec>(spec_);
      dense_.emplace_back(h.encoder, max_);
      dense_.emplace_back(h.decoder, max_);
      circuit_.emplace_back(h.circuit, max_);
      n_enc_ = count_params(h.encoder);
      n_circ_ = h.circuit.trainable_angles();
      circ_out_.setZero(h.circuit.n_qubits, K * max_);
      circ_bar_.setZero(h.circuit.n_qubits, K * max_);
      enc_bar_.setZero(h.circuit.n_qubits, K * max_);
    }
    n_params_ = count_params(spec_);
  }

  int max_points() const { return max_; }
  std::size_t param_count() const { return n_params_; }

  void bind(std::span<const double> params) {
    if (params.size() != n_params_)
      throw StructuralError("model batch: parameter count mismatch");
    params_ = params;
    if (!circuit_.empty()) circuit_[0].bind(params.subspan(n_enc_, n_circ_));
  }

  std::span<const double> forward(std::span<const Point> pts) {
    const int P = static_cast<int>(pts.size());
    if (P < 1 || P > max_) throw StructuralError("model batch: block size out of range");
    P_ = P;
    in_.leftCols(K * P).setZero();
    for (int p = 0; p < P; ++p) {
      in_(0, p) = pts[p].t;
      in_(1, p) = pts[p].x;
      if constexpr (K == 4) {
        in_(0, P + p) = 1.0;      // dt of t
        in_(1, 2 * P + p) = 1.0;  // dx of x
      }
    }
    const RowMat* u;
    if (circuit_.empty()) {
      u = &dense_[0].forward(params_, in_, P);
    } else {
      enc_ = &dense_[0].forward(params_.first(n_enc_), in_, P);
      circuit_[0].forward(*enc_, circ_out_, P);
      u = &dense_[1].forward(params_.subspan(n_enc_ + n_circ_), circ_out_, P);
    }
    return {u->data(), static_cast<std::size_t>(K * P)};
  }

  void backward(std::span<const double> ubar, std::span<double> grad) {
    const int C = K * P_;
    std::copy(ubar.begin(), ubar.begin() + C, u_bar_.data());
    if (circuit_.empty()) {
      dense_[0].backward(params_, u_bar_, grad, in_bar_);
      return;
    }
    dense_[1].backward(params_.subspan(n_enc_ + n_circ_), u_bar_,
                       grad.subspan(n_enc_ + n_circ_), circ_bar_);
    circuit_[0].backward(circ_bar_, enc_bar_, grad.subspan(n_enc_, n_circ_));
    dense_[0].backward(params_.first(n_enc_), enc_bar_, grad.first(n_enc_), in_bar_);
  }

  /// Encoder outputs i_j of the last forward(), one row per qubit (hybrid only).
  const RowMat& encoder_outputs() const { return *enc_; }
  /// Circuit outputs o_j of the last forward(), one row per qubit (hybrid only).
  const RowMat& circuit_outputs() const { return circ_out_; }

 private:
  ModelSpec spec_;
  int max_;
  int P_ = 0;
  std::vector<DenseBatch<K>> dense_;
  std::vector<CircuitBatch<K>> circuit_;
  std::span<const double> params_;
  std::size_t n_params_ = 0, n_enc_ = 0, n_circ_ = 0;
  const RowMat* enc_ = nullptr;
  RowMat in_, in_bar_, u_bar_, circ_out_, circ_bar_, enc_bar_;
};

}  // namespace qpinn
