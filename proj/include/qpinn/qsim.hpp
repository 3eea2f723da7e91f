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
 * @file qsim.hpp
 * @brief Dense statevector simulation of a data re-uploading circuit.
 *
 * Amplitudes are complex numbers whose real and imaginary parts are carried
 * by a scalar type S: double for plain simulation, Jet2 for input
 * derivatives, or Var when recording onto a reverse tape. Qubit q is bit q
 * of the basis-state index.
 *
 * The circuit is |0...0> followed by `depth` repetitions of
 *   encoding block:    R_enc(i_j) on qubit j, R_enc = R_Y on even blocks and
 *                      R_X on odd blocks (or both, R_Y then R_X)
 *   variational block: R_Y(theta) R_Z(theta) on every qubit, then the CNOT
 *                      ring 0->1, 1->2, ..., (n-1)->0
 * and the outputs are <Z_j> for every qubit.
 */

#include <qpinn/errors.hpp>
#include <qpinn/jet.hpp>
#include <qpinn/tape.hpp>

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

namespace qpinn {

enum class Axis : std::uint8_t { X, Y, Z };

template <class S>
struct Amplitude {
  S re{};
  S im{};
};

template <class S>
class Statevector {
 public:
  /// |0...0> with constants lifted from `like`.
  Statevector(int n_qubits, const S& like) : n_qubits_(n_qubits) {
    if (n_qubits < 1 || n_qubits > 16)
      throw StructuralError("statevector: qubit count out of range");
    const S zero = lift(like, 0.0);
    amps_.assign(std::size_t{1} << n_qubits, Amplitude<S>{zero, zero});
    amps_[0].re = lift(like, 1.0);
  }

  int n_qubits() const { return n_qubits_; }
  std::size_t size() const { return amps_.size(); }
  Amplitude<S>& operator[](std::size_t i) { return amps_[i]; }
  const Amplitude<S>& operator[](std::size_t i) const { return amps_[i]; }
  std::span<Amplitude<S>> amplitudes() { return amps_; }
  std::span<const Amplitude<S>> amplitudes() const { return amps_; }

  /// Sum of |amp|^2 at value level.
  double value_norm() const {
    double n = 0.0;
    for (const auto& a : amps_) {
      const double r = value_of(a.re), i = value_of(a.im);
      n += r * r + i * i;
    }
    return n;
  }

  void check_qubit(int q) const {
    if (q < 0 || q >= n_qubits_)
      throw StructuralError("statevector: qubit index " + std::to_string(q) +
                            " out of range");
  }

 private:
  int n_qubits_;
  std::vector<Amplitude<S>> amps_;
};

namespace detail {

// A rotation acts on the four real components (a0.re, a0.im, a1.re, a1.im)
// of every amplitude pair as out[k] = c * in[k] + sign[k] * s * in[partner[k]]
// with c = cos(angle/2), s = sin(angle/2).
struct RotationPattern {
  int partner[4];
  double sign[4];
};

constexpr RotationPattern rotation_pattern(Axis axis) {
  switch (axis) {
    case Axis::X: return {{3, 2, 1, 0}, {+1.0, -1.0, +1.0, -1.0}};
    case Axis::Y: return {{2, 3, 0, 1}, {-1.0, -1.0, +1.0, +1.0}};
    case Axis::Z: return {{1, 0, 3, 2}, {+1.0, -1.0, -1.0, +1.0}};
  }
  return {{0, 1, 2, 3}, {0.0, 0.0, 0.0, 0.0}};
}

template <class S>
S& component(Amplitude<S>* pair[2], int k) {
  return (k & 2) ? ((k & 1) ? pair[1]->im : pair[1]->re)
                 : ((k & 1) ? pair[0]->im : pair[0]->re);
}

template <class S, class C>
S signed_term(const C& c, const S& a, const C& s, double sign, const S& b) {
  return sign > 0 ? c * a + s * b : c * a - s * b;
}

}  // namespace detail

/// Applies R_axis(angle) = exp(-i angle sigma_axis / 2) to `qubit`.
/// `angle` may be a double or the statevector's own scalar type.
template <class S, class C>
void apply_rotation(Statevector<S>& sv, Axis axis, int qubit, const C& angle) {
  sv.check_qubit(qubit);
  using std::cos;
  using std::sin;
  const C half = angle * 0.5;
  const C c = cos(half);
  const C s = sin(half);
  const auto pat = detail::rotation_pattern(axis);
  const std::size_t bit = std::size_t{1} << qubit;
  for (std::size_t i0 = 0; i0 < sv.size(); ++i0) {
    if (i0 & bit) continue;
    Amplitude<S>* pair[2] = {&sv[i0], &sv[i0 | bit]};
    const S in[4] = {pair[0]->re, pair[0]->im, pair[1]->re, pair[1]->im};
    for (int k = 0; k < 4; ++k)
      detail::component(pair, k) = detail::signed_term(
          c, in[k], s, pat.sign[k], in[pat.partner[k]]);
  }
}

/// Flips `target` on every basis state whose `control` bit is set.
template <class S>
void apply_cnot(Statevector<S>& sv, int control, int target) {
  sv.check_qubit(control);
  sv.check_qubit(target);
  if (control == target)
    throw StructuralError("cnot: control and target must differ");
  const std::size_t cb = std::size_t{1} << control;
  const std::size_t tb = std::size_t{1} << target;
  for (std::size_t i = 0; i < sv.size(); ++i)
    if ((i & cb) && !(i & tb)) std::swap(sv[i], sv[i | tb]);
}

/// <Z> on `qubit`: +|amp|^2 where the bit is 0, -|amp|^2 where it is 1.
template <class S>
S expect_z(const Statevector<S>& sv, int qubit) {
  sv.check_qubit(qubit);
  const std::size_t bit = std::size_t{1} << qubit;
  S plus = lift(sv[0].re, 0.0);
  S minus = lift(sv[0].re, 0.0);
  for (std::size_t i = 0; i < sv.size(); ++i) {
    const S p = sv[i].re * sv[i].re + sv[i].im * sv[i].im;
    if (i & bit)
      minus = minus + p;
    else
      plus = plus + p;
  }
  return plus - minus;
}

enum class EncodingSchedule : std::uint8_t {
  Alternating,  ///< R_Y on even blocks, R_X on odd blocks
  BothAxes,     ///< R_Y then R_X in every block
};

struct CircuitLayout {
  int n_qubits = 3;
  int depth = 1;
  EncodingSchedule encoding = EncodingSchedule::Alternating;

  static constexpr int kRotationsPerQubit = 2;

  int trainable_angles() const { return depth * n_qubits * kRotationsPerQubit; }
  bool operator==(const CircuitLayout&) const = default;
};

/// One gate of a compiled circuit. Rotation angles come either from the
/// circuit input `source` (encoding) or from trainable angle `source`.
struct Gate {
  enum class Kind : std::uint8_t { EncodeRotation, TrainedRotation, Cnot };
  Kind kind;
  Axis axis;
  int qubit;   ///< rotation target, or CNOT control
  int target;  ///< CNOT target
  int source;  ///< input index or angle index
};

/// Flat gate list for a layout, in application order.
inline std::vector<Gate> compile(const CircuitLayout& layout) {
  if (layout.n_qubits < 1 || layout.n_qubits > 8)
    throw StructuralError("circuit: n_qubits must be in 1..8");
  if (layout.depth < 0) throw StructuralError("circuit: negative depth");
  std::vector<Gate> gates;
  const int n = layout.n_qubits;
  int angle = 0;
  for (int block = 0; block < layout.depth; ++block) {
    for (int q = 0; q < n; ++q) {
      if (layout.encoding == EncodingSchedule::BothAxes) {
        gates.push_back({Gate::Kind::EncodeRotation, Axis::Y, q, 0, q});
        gates.push_back({Gate::Kind::EncodeRotation, Axis::X, q, 0, q});
      } else {
        const Axis a = (block % 2 == 0) ? Axis::Y : Axis::X;
        gates.push_back({Gate::Kind::EncodeRotation, a, q, 0, q});
      }
    }
    for (int q = 0; q < n; ++q) {
      gates.push_back({Gate::Kind::TrainedRotation, Axis::Y, q, 0, angle++});
      gates.push_back({Gate::Kind::TrainedRotation, Axis::Z, q, 0, angle++});
    }
    if (n > 1) {
      for (int q = 0; q < n; ++q) {
        const int t = (q + 1) % n;
        // A two-qubit ring would apply 0->1 and 1->0; both are kept.
        gates.push_back({Gate::Kind::Cnot, Axis::Z, q, t, 0});
      }
    }
  }
  return gates;
}

/// Runs the circuit on generic scalars. `inputs` has n_qubits entries,
/// `thetas` has layout.trainable_angles() entries. Returns <Z_j> per qubit.
template <class S, class C>
std::vector<S> run_circuit(const CircuitLayout& layout, std::span<const S> inputs,
                           std::span<const C> thetas, const S& like) {
  if (inputs.size() != static_cast<std::size_t>(layout.n_qubits))
    throw StructuralError("run_circuit: expected one input per qubit");
  if (thetas.size() != static_cast<std::size_t>(layout.trainable_angles()))
    throw StructuralError("run_circuit: trainable angle count mismatch");
  Statevector<S> sv(layout.n_qubits, like);
  for (const Gate& g : compile(layout)) {
    switch (g.kind) {
      case Gate::Kind::EncodeRotation:
        apply_rotation(sv, g.axis, g.qubit, inputs[g.source]);
        break;
      case Gate::Kind::TrainedRotation:
        apply_rotation(sv, g.axis, g.qubit, thetas[g.source]);
        break;
      case Gate::Kind::Cnot:
        apply_cnot(sv, g.qubit, g.target);
        break;
    }
  }
  std::vector<S> out;
  out.reserve(layout.n_qubits);
  for (int q = 0; q < layout.n_qubits; ++q) out.push_back(expect_z(sv, q));
  return out;
}

template <class S>
std::vector<S> run_circuit(const CircuitLayout& layout, std::span<const S> inputs,
                           std::span<const double> thetas) {
  const S like = inputs.empty() ? S{} : inputs[0];
  return run_circuit<S, double>(layout, inputs, thetas, like);
}

/**
 * Circuit evaluation with a hand-written reverse sweep, S in {double, Jet2}.
 *
 * Forward stores the state before every gate. Trained angles enter as plain
 * doubles (they do not depend on t or x), so their rotations cost a scalar
 * times a jet; encoding angles are full jets.
 */
template <class S>
class CircuitKernel {
 public:
  explicit CircuitKernel(const CircuitLayout& layout)
      : layout_(layout),
        gates_(compile(layout)),
        dim_(std::size_t{1} << layout.n_qubits),
        states_((gates_.size() + 1) * dim_),
        cs_(layout.trainable_angles()),
        enc_(layout.n_qubits),
        enc_bar_(layout.n_qubits) {}

  const CircuitLayout& layout() const { return layout_; }

  /// Caches cos/sin of the trained half-angles.
  void bind(std::span<const double> thetas) {
    if (thetas.size() != cs_.size())
      throw StructuralError("circuit kernel: trainable angle count mismatch");
    for (std::size_t k = 0; k < thetas.size(); ++k)
      cs_[k] = {std::cos(0.5 * thetas[k]), std::sin(0.5 * thetas[k])};
  }

  /// Forward pass; writes one <Z> per qubit into `out`.
  void forward(std::span<const S> inputs, std::span<S> out) {
    for (int j = 0; j < layout_.n_qubits; ++j) {
      const S half = inputs[j] * 0.5;
      enc_[j] = {half, cos_of(half), sin_of(half)};
    }
    Amplitude<S>* psi = states_.data();
    for (std::size_t i = 0; i < dim_; ++i) psi[i] = {S(0.0), S(0.0)};
    psi[0].re = S(1.0);
    for (std::size_t g = 0; g < gates_.size(); ++g) {
      const Amplitude<S>* in = states_.data() + g * dim_;
      Amplitude<S>* next = states_.data() + (g + 1) * dim_;
      const Gate& gate = gates_[g];
      switch (gate.kind) {
        case Gate::Kind::EncodeRotation: {
          const auto& e = enc_[gate.source];
          rotate_forward<S>(in, next, gate, e.c, e.s);
          break;
        }
        case Gate::Kind::TrainedRotation: {
          const auto& cs = cs_[gate.source];
          rotate_forward<double>(in, next, gate, cs.c, cs.s);
          break;
        }
        case Gate::Kind::Cnot:
          cnot(in, next, gate);
          break;
      }
    }
    const Amplitude<S>* fin = states_.data() + gates_.size() * dim_;
    for (int q = 0; q < layout_.n_qubits; ++q) {
      const std::size_t bit = std::size_t{1} << q;
      S acc(0.0);
      for (std::size_t i = 0; i < dim_; ++i) {
        const S p = fin[i].re * fin[i].re + fin[i].im * fin[i].im;
        if (i & bit)
          acc -= p;
        else
          acc += p;
      }
      out[q] = acc;
    }
  }

  /// Reverse sweep after forward(). Accumulates into `inputs_bar` and
  /// `thetas_bar`.
  void backward(std::span<const S> out_bar, std::span<S> inputs_bar,
                std::span<double> thetas_bar) {
    std::vector<Amplitude<S>>& bar = bar_;
    bar.resize(dim_);
    const Amplitude<S>* fin = states_.data() + gates_.size() * dim_;
    for (std::size_t i = 0; i < dim_; ++i) {
      S sre(0.0), sim(0.0);
      for (int q = 0; q < layout_.n_qubits; ++q) {
        const double sign = (i >> q) & 1 ? -1.0 : 1.0;
        sre += mul_adjoint(out_bar[q], fin[i].re) * (2.0 * sign);
        sim += mul_adjoint(out_bar[q], fin[i].im) * (2.0 * sign);
      }
      bar[i] = {sre, sim};
    }
    for (int j = 0; j < layout_.n_qubits; ++j) enc_bar_[j] = {S(0.0), S(0.0)};
    for (std::size_t g = gates_.size(); g-- > 0;) {
      const Amplitude<S>* in = states_.data() + g * dim_;
      const Gate& gate = gates_[g];
      switch (gate.kind) {
        case Gate::Kind::EncodeRotation: {
          const auto& e = enc_[gate.source];
          auto& eb = enc_bar_[gate.source];
          rotate_backward<S>(in, gate, e.c, e.s, eb.c, eb.s);
          break;
        }
        case Gate::Kind::TrainedRotation: {
          const auto& cs = cs_[gate.source];
          double cbar = 0.0, sbar = 0.0;
          rotate_backward<double>(in, gate, cs.c, cs.s, cbar, sbar);
          thetas_bar[gate.source] += 0.5 * (cs.c * sbar - cs.s * cbar);
          break;
        }
        case Gate::Kind::Cnot:
          cnot_inplace(bar.data(), gate);
          break;
      }
    }
    // c = cos(h), s = sin(h), h = input / 2.
    for (int j = 0; j < layout_.n_qubits; ++j) {
      const S& h = enc_[j].half;
      const double hv = value_of(h);
      const double sh = std::sin(hv), ch = std::cos(hv);
      const S hbar = chain_adjoint(enc_bar_[j].c, h, -sh, -ch, sh) +
                     chain_adjoint(enc_bar_[j].s, h, ch, -sh, -ch);
      inputs_bar[j] += hbar * 0.5;
    }
  }

 private:
  struct EncodedAngle {
    S half;
    S c;
    S s;
  };
  struct CosSin {
    double c = 1.0;
    double s = 0.0;
  };
  struct CosSinBar {
    S c;
    S s;
  };

  static S cos_of(const S& a) {
    using std::cos;
    return cos(a);
  }
  static S sin_of(const S& a) {
    using std::sin;
    return sin(a);
  }

  template <class C>
  void rotate_forward(const Amplitude<S>* in, Amplitude<S>* out,
                      const Gate& gate, const C& c, const C& s) const {
    switch (gate.axis) {
      case Axis::X: return rotate_forward<Axis::X>(in, out, gate.qubit, c, s);
      case Axis::Y: return rotate_forward<Axis::Y>(in, out, gate.qubit, c, s);
      case Axis::Z: return rotate_forward<Axis::Z>(in, out, gate.qubit, c, s);
    }
  }

  template <class C>
  void rotate_backward(const Amplitude<S>* in, const Gate& gate, const C& c,
                       const C& s, C& cbar, C& sbar) {
    switch (gate.axis) {
      case Axis::X: return rotate_backward<Axis::X>(in, gate.qubit, c, s, cbar, sbar);
      case Axis::Y: return rotate_backward<Axis::Y>(in, gate.qubit, c, s, cbar, sbar);
      case Axis::Z: return rotate_backward<Axis::Z>(in, gate.qubit, c, s, cbar, sbar);
    }
  }

  // The axis is a template argument so the partner/sign pattern folds into
  // straight-line code.
  template <Axis A, class C>
  void rotate_forward(const Amplitude<S>* in, Amplitude<S>* out, int qubit,
                      const C& c, const C& s) const {
    constexpr auto pat = detail::rotation_pattern(A);
    const std::size_t bit = std::size_t{1} << qubit;
    for (std::size_t i0 = 0; i0 < dim_; ++i0) {
      if (i0 & bit) continue;
      const std::size_t i1 = i0 | bit;
      const S v[4] = {in[i0].re, in[i0].im, in[i1].re, in[i1].im};
      S w[4];
      for (int k = 0; k < 4; ++k) {
        const S cs = c * v[k];
        const S ss = s * v[pat.partner[k]];
        w[k] = pat.sign[k] > 0 ? cs + ss : cs - ss;
      }
      out[i0] = {w[0], w[1]};
      out[i1] = {w[2], w[3]};
    }
  }

  template <Axis A, class C>
  void rotate_backward(const Amplitude<S>* in, int qubit, const C& c,
                       const C& s, C& cbar, C& sbar) {
    constexpr auto pat = detail::rotation_pattern(A);
    const std::size_t bit = std::size_t{1} << qubit;
    Amplitude<S>* bar = bar_.data();
    for (std::size_t i0 = 0; i0 < dim_; ++i0) {
      if (i0 & bit) continue;
      const std::size_t i1 = i0 | bit;
      const S v[4] = {in[i0].re, in[i0].im, in[i1].re, in[i1].im};
      const S wb[4] = {bar[i0].re, bar[i0].im, bar[i1].re, bar[i1].im};
      S vb[4];
      for (int k = 0; k < 4; ++k) vb[k] = mul_adjoint(wb[k], c);
      for (int k = 0; k < 4; ++k) {
        const int p = pat.partner[k];
        if (pat.sign[k] > 0) {
          vb[p] += mul_adjoint(wb[k], s);
          accumulate_coef(sbar, wb[k], v[p], 1.0);
        } else {
          vb[p] -= mul_adjoint(wb[k], s);
          accumulate_coef(sbar, wb[k], v[p], -1.0);
        }
        accumulate_coef(cbar, wb[k], v[k], 1.0);
      }
      bar[i0] = {vb[0], vb[1]};
      bar[i1] = {vb[2], vb[3]};
    }
  }

  static void accumulate_coef(double& acc, const S& ybar, const S& a,
                              double sign) {
    acc += sign * coef_adjoint(ybar, a);
  }
  template <class T = S>
    requires(!std::is_same_v<T, double>)
  static void accumulate_coef(S& acc, const S& ybar, const S& a, double sign) {
    acc += mul_adjoint(ybar, a) * sign;
  }

  void cnot(const Amplitude<S>* in, Amplitude<S>* out, const Gate& gate) const {
    const std::size_t cb = std::size_t{1} << gate.qubit;
    const std::size_t tb = std::size_t{1} << gate.target;
    for (std::size_t i = 0; i < dim_; ++i)
      out[i] = (i & cb) ? in[i ^ tb] : in[i];
  }

  void cnot_inplace(Amplitude<S>* a, const Gate& gate) const {
    const std::size_t cb = std::size_t{1} << gate.qubit;
    const std::size_t tb = std::size_t{1} << gate.target;
    for (std::size_t i = 0; i < dim_; ++i)
      if ((i & cb) && !(i & tb)) std::swap(a[i], a[i | tb]);
  }

  CircuitLayout layout_;
  std::vector<Gate> gates_;
  std::size_t dim_;
  std::vector<Amplitude<S>> states_;
  std::vector<Amplitude<S>> bar_;
  std::vector<CosSin> cs_;
  std::vector<EncodedAngle> enc_;
  std::vector<CosSinBar> enc_bar_;
};

}  // namespace qpinn
