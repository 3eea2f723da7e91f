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
 * @file netlib.hpp
 * @brief Classical dense PINNs and hybrid encoder -> circuit -> decoder PINNs.
 *
 * Parameter layout. A dense network stores, per layer, the weight matrix
 * row-major (out x in) followed by the biases. A hybrid network stores the
 * encoder, then the circuit angles (block-major, qubit, then R_Y/R_Z), then
 * the decoder.
 */

#include <qpinn/errors.hpp>
#include <qpinn/jet.hpp>
#include <qpinn/qsim.hpp>
#include <qpinn/tape.hpp>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace qpinn {

/// Fully connected tanh network. `widths` includes input and output layer.
struct DenseSpec {
  std::vector<int> widths;

  int hidden_layers() const { return static_cast<int>(widths.size()) - 2; }
  bool operator==(const DenseSpec&) const = default;
};

struct HybridSpec {
  DenseSpec encoder;
  CircuitLayout circuit;
  DenseSpec decoder;
  int depth_c = 0;

  bool operator==(const HybridSpec&) const = default;
};

using ModelSpec = std::variant<DenseSpec, HybridSpec>;

inline int count_params(const DenseSpec& spec) {
  int n = 0;
  for (std::size_t i = 0; i + 1 < spec.widths.size(); ++i)
    n += (spec.widths[i] + 1) * spec.widths[i + 1];
  return n;
}

inline int count_params(const HybridSpec& spec) {
  return count_params(spec.encoder) + spec.circuit.trainable_angles() +
         count_params(spec.decoder);
}

inline int count_params(const ModelSpec& spec) {
  return std::visit([](const auto& s) { return count_params(s); }, spec);
}

inline void validate(const DenseSpec& spec) {
  if (spec.widths.size() < 2)
    throw StructuralError("dense spec: need at least input and output layer");
  for (int w : spec.widths)
    if (w < 1) throw StructuralError("dense spec: widths must be positive");
}

inline void validate(const HybridSpec& spec) {
  validate(spec.encoder);
  validate(spec.decoder);
  if (spec.encoder.widths.back() != spec.circuit.n_qubits)
    throw StructuralError("hybrid spec: encoder output width != n_qubits");
  if (spec.decoder.widths.front() != spec.circuit.n_qubits)
    throw StructuralError("hybrid spec: decoder input width != n_qubits");
}

inline void validate(const ModelSpec& spec) {
  std::visit([](const auto& s) { validate(s); }, spec);
}

/// 2 -> [width]^depth -> 1.
inline DenseSpec dense_spec(int depth, int width) {
  DenseSpec s;
  s.widths.push_back(2);
  for (int i = 0; i < depth; ++i) s.widths.push_back(width);
  s.widths.push_back(1);
  return s;
}

/// Uniform hidden width whose parameter count is closest to `target`;
/// ties go to the smaller width.
inline DenseSpec plan_cpinn(int target, int depth) {
  if (depth < 1)
    throw ConfigError("plan_cpinn: at least one hidden layer is required");
  if (count_params(dense_spec(depth, 1)) > target)
    throw ConfigError("plan_cpinn: target below the minimal count for depth " +
                      std::to_string(depth));
  int best_w = 1;
  int best_gap = std::abs(count_params(dense_spec(depth, 1)) - target);
  for (int w = 2;; ++w) {
    const int n = count_params(dense_spec(depth, w));
    const int gap = std::abs(n - target);
    if (gap < best_gap) {
      best_gap = gap;
      best_w = w;
    }
    if (n > target) break;
  }
  return dense_spec(depth, best_w);
}

inline constexpr int kHybridQubits = 3;
inline constexpr int kHybridWidth = 6;

inline HybridSpec hybrid_spec(int depth_c, int circuit_depth,
                              EncodingSchedule encoding = EncodingSchedule::Alternating) {
  if (depth_c < 0 || depth_c > 1)
    throw ConfigError("hybrid spec: classical depth must be 0 or 1");
  HybridSpec h;
  h.depth_c = depth_c;
  h.encoder.widths = {2};
  h.decoder.widths = {kHybridQubits};
  for (int i = 0; i < depth_c; ++i) {
    h.encoder.widths.push_back(kHybridWidth);
    h.decoder.widths.push_back(kHybridWidth);
  }
  h.encoder.widths.push_back(kHybridQubits);
  h.decoder.widths.push_back(1);
  h.circuit = {kHybridQubits, circuit_depth, encoding};
  return h;
}

/// Circuit depth d = round((target - classical) / (n_q r)), ties to the
/// smaller depth, d >= 1.
inline HybridSpec plan_qpinn(int target, int depth_c,
                             EncodingSchedule encoding = EncodingSchedule::Alternating) {
  const HybridSpec shell = hybrid_spec(depth_c, 0, encoding);
  const int classical = count_params(shell);
  const int remainder = target - classical;
  if (remainder <= 0)
    throw ConfigError("plan_qpinn: target " + std::to_string(target) +
                      " leaves no parameters for the circuit");
  const int per_block = kHybridQubits * CircuitLayout::kRotationsPerQubit;
  int d = remainder / per_block;
  if (2 * (remainder - d * per_block) > per_block) ++d;
  if (d < 1) d = 1;
  return hybrid_spec(depth_c, d, encoding);
}

namespace detail {

inline void init_dense(const DenseSpec& spec, std::mt19937_64& rng,
                       std::vector<double>& out) {
  for (std::size_t l = 0; l + 1 < spec.widths.size(); ++l) {
    const int in = spec.widths[l], outw = spec.widths[l + 1];
    const double lim = std::sqrt(6.0 / (in + outw));
    std::uniform_real_distribution<double> u(-lim, lim);
    for (int i = 0; i < in * outw; ++i) out.push_back(u(rng));
    for (int i = 0; i < outw; ++i) out.push_back(0.0);
  }
}

}  // namespace detail

/// Glorot-uniform weights, zero biases, circuit angles uniform in [0, 2 pi).
inline ParamVector init_params(const ModelSpec& spec, std::uint64_t seed) {
  validate(spec);
  std::mt19937_64 rng(seed);
  ParamVector p;
  p.values.reserve(count_params(spec));
  if (const auto* d = std::get_if<DenseSpec>(&spec)) {
    detail::init_dense(*d, rng, p.values);
  } else {
    const auto& h = std::get<HybridSpec>(spec);
    detail::init_dense(h.encoder, rng, p.values);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    for (int k = 0; k < h.circuit.trainable_angles(); ++k)
      p.values.push_back(angle(rng));
    detail::init_dense(h.decoder, rng, p.values);
  }
  return p;
}

struct ModelHandle {
  ModelSpec spec;
  ParamVector params;
  int target_params = 0;
  std::uint64_t seed = 0;
  int epoch = 0;

  int actual_params() const { return count_params(spec); }
  bool is_hybrid() const { return std::holds_alternative<HybridSpec>(spec); }
};

inline ModelHandle make_model(const ModelSpec& spec, std::uint64_t seed,
                              int target = 0) {
  ModelHandle m{spec, init_params(spec, seed), target, seed, 0};
  if (m.target_params == 0) m.target_params = m.actual_params();
  return m;
}

// ---------------------------------------------------------------------------
// Generic forward. Works for any scalar carrier with +, * and tanh (double,
// Jet2, Var); used for tape gradients and as a reference for the kernels.

template <class S>
std::vector<S> dense_forward(const DenseSpec& spec, std::span<const S> params,
                             std::vector<S> a) {
  using std::tanh;
  std::size_t off = 0;
  const std::size_t layers = spec.widths.size() - 1;
  for (std::size_t l = 0; l < layers; ++l) {
    const int in = spec.widths[l], out = spec.widths[l + 1];
    const std::size_t boff = off + static_cast<std::size_t>(in) * out;
    std::vector<S> z;
    z.reserve(out);
    for (int i = 0; i < out; ++i) {
      S acc = params[boff + i];
      for (int j = 0; j < in; ++j) acc = acc + params[off + i * in + j] * a[j];
      z.push_back(l + 1 < layers ? tanh(acc) : acc);
    }
    a = std::move(z);
    off = boff + out;
  }
  return a;
}

template <class S>
S forward_generic(const ModelSpec& spec, std::span<const S> params, const S& t,
                  const S& x) {
  if (params.size() != static_cast<std::size_t>(count_params(spec)))
    throw StructuralError("forward: parameter count mismatch");
  if (const auto* d = std::get_if<DenseSpec>(&spec))
    return dense_forward<S>(*d, params, {t, x})[0];
  const auto& h = std::get<HybridSpec>(spec);
  const std::size_t ne = count_params(h.encoder);
  const std::size_t nc = h.circuit.trainable_angles();
  const std::vector<S> enc = dense_forward<S>(h.encoder, params.first(ne), {t, x});
  const std::vector<S> o = run_circuit<S, S>(
      h.circuit, std::span<const S>(enc), params.subspan(ne, nc), t);
  return dense_forward<S>(h.decoder, params.subspan(ne + nc), o)[0];
}

// ---------------------------------------------------------------------------
// Evaluation kernels with hand-written reverse sweeps (S in {double, Jet2}).

template <class S>
class DenseKernel {
 public:
  explicit DenseKernel(const DenseSpec& spec) : spec_(spec) {
    validate(spec_);
    const std::size_t layers = spec_.widths.size();
    acts_.resize(layers);
    pre_.resize(layers);
    bars_.resize(layers);
    for (std::size_t l = 0; l < layers; ++l) {
      acts_[l].resize(spec_.widths[l]);
      pre_[l].resize(spec_.widths[l]);
      bars_[l].resize(spec_.widths[l]);
    }
  }

  int input_width() const { return spec_.widths.front(); }
  int output_width() const { return spec_.widths.back(); }

  std::span<const S> forward(std::span<const double> params,
                             std::span<const S> input) {
    std::copy(input.begin(), input.end(), acts_[0].begin());
    std::size_t off = 0;
    const std::size_t layers = spec_.widths.size() - 1;
    for (std::size_t l = 0; l < layers; ++l) {
      const int in = spec_.widths[l], out = spec_.widths[l + 1];
      const double* w = params.data() + off;
      const double* b = w + static_cast<std::size_t>(in) * out;
      const std::vector<S>& a = acts_[l];
      std::vector<S>& z = pre_[l + 1];
      std::vector<S>& y = acts_[l + 1];
      const bool hidden = l + 1 < layers;
      for (int i = 0; i < out; ++i) {
        S acc(b[i]);
        const double* wr = w + static_cast<std::size_t>(i) * in;
        for (int j = 0; j < in; ++j) acc += a[j] * wr[j];
        z[i] = acc;
        y[i] = hidden ? activate(acc) : acc;
      }
      off += static_cast<std::size_t>(in + 1) * out;
    }
    return acts_.back();
  }

  /// Reverse sweep after forward(). Adds parameter adjoints into `grad` and
  /// writes the input adjoint into `input_bar`.
  void backward(std::span<const double> params, std::span<const S> out_bar,
                std::span<double> grad, std::span<S> input_bar) {
    const std::size_t layers = spec_.widths.size() - 1;
    std::copy(out_bar.begin(), out_bar.end(), bars_[layers].begin());
    std::size_t off = static_cast<std::size_t>(count_params(spec_));
    for (std::size_t l = layers; l-- > 0;) {
      const int in = spec_.widths[l], out = spec_.widths[l + 1];
      off -= static_cast<std::size_t>(in + 1) * out;
      const double* w = params.data() + off;
      double* gw = grad.data() + off;
      double* gb = gw + static_cast<std::size_t>(in) * out;
      const bool hidden = l + 1 < layers;
      std::vector<S>& zbar = bars_[l + 1];
      if (hidden)
        for (int i = 0; i < out; ++i)
          zbar[i] = tanh_adjoint(zbar[i], pre_[l + 1][i], value_of(acts_[l + 1][i]));
      const std::vector<S>& a = acts_[l];
      std::vector<S>& abar = bars_[l];
      for (int j = 0; j < in; ++j) abar[j] = S(0.0);
      for (int i = 0; i < out; ++i) {
        const S& zb = zbar[i];
        gb[i] += value_of(zb);
        const double* wr = w + static_cast<std::size_t>(i) * in;
        double* gr = gw + static_cast<std::size_t>(i) * in;
        for (int j = 0; j < in; ++j) {
          gr[j] += coef_adjoint(zb, a[j]);
          abar[j] += zb * wr[j];
        }
      }
    }
    std::copy(bars_[0].begin(), bars_[0].end(), input_bar.begin());
  }

 private:
  static S activate(const S& z) {
    using std::tanh;
    return tanh(z);
  }

  DenseSpec spec_;
  std::vector<std::vector<S>> acts_;
  std::vector<std::vector<S>> pre_;
  std::vector<std::vector<S>> bars_;
};

/**
 * Forward and reverse evaluation of a model at one point (t, x).
 *
 * bind() must be called whenever the parameters change. After forward(),
 * backward(ubar, grad) adds d(<ubar, u>)/d(theta) into grad.
 */
template <class S>
class ModelKernel {
 public:
  explicit ModelKernel(const ModelSpec& spec) : spec_(spec) {
    validate(spec_);
    if (const auto* d = std::get_if<DenseSpec>(&spec_)) {
      dense_.emplace_back(*d);
    } else {
      const auto& h = std::get<HybridSpec>(spec_);
      dense_.emplace_back(h.encoder);
      dense_.emplace_back(h.decoder);
      circuit_.emplace_back(h.circuit);
      n_enc_ = count_params(h.encoder);
      n_circ_ = h.circuit.trainable_angles();
      enc_out_.resize(h.circuit.n_qubits);
      circ_out_.resize(h.circuit.n_qubits);
      enc_bar_.resize(h.circuit.n_qubits);
      circ_bar_.resize(h.circuit.n_qubits);
    }
    n_params_ = count_params(spec_);
  }

  const ModelSpec& spec() const { return spec_; }
  std::size_t param_count() const { return n_params_; }

  void bind(std::span<const double> params) {
    if (params.size() != n_params_)
      throw StructuralError("model kernel: parameter count mismatch");
    params_ = params;
    if (!circuit_.empty()) circuit_[0].bind(params.subspan(n_enc_, n_circ_));
  }

  S forward(const S& t, const S& x) {
    const S in[2] = {t, x};
    if (circuit_.empty()) return dense_[0].forward(params_, in)[0];
    const auto enc = dense_[0].forward(params_.first(n_enc_), in);
    std::copy(enc.begin(), enc.end(), enc_out_.begin());
    circuit_[0].forward(enc_out_, circ_out_);
    return dense_[1].forward(params_.subspan(n_enc_ + n_circ_), circ_out_)[0];
  }

  void backward(const S& ubar, std::span<double> grad) {
    const S ob[1] = {ubar};
    S in_bar[2];
    if (circuit_.empty()) {
      dense_[0].backward(params_, ob, grad, in_bar);
      return;
    }
    dense_[1].backward(params_.subspan(n_enc_ + n_circ_), ob,
                       grad.subspan(n_enc_ + n_circ_), circ_bar_);
    for (auto& e : enc_bar_) e = S(0.0);
    circuit_[0].backward(circ_bar_, enc_bar_, grad.subspan(n_enc_, n_circ_));
    dense_[0].backward(params_.first(n_enc_), enc_bar_, grad.first(n_enc_),
                       in_bar);
  }

  /// Encoder outputs i_j of the last forward() (hybrid only).
  std::span<const S> encoder_outputs() const { return enc_out_; }
  /// Circuit outputs o_j of the last forward() (hybrid only).
  std::span<const S> circuit_outputs() const { return circ_out_; }

 private:
  ModelSpec spec_;
  std::vector<DenseKernel<S>> dense_;
  std::vector<CircuitKernel<S>> circuit_;
  std::span<const double> params_;
  std::size_t n_params_ = 0;
  std::size_t n_enc_ = 0;
  std::size_t n_circ_ = 0;
  std::vector<S> enc_out_, circ_out_, enc_bar_, circ_bar_;
};

/// u(t, x) as a jet with t and x seeded.
inline Jet2 forward(const ModelHandle& model, const Jet2& t, const Jet2& x) {
  ModelKernel<Jet2> k(model.spec);
  k.bind(model.params.values);
  return k.forward(t, x);
}

inline double forward_value(const ModelHandle& model, double t, double x) {
  ModelKernel<double> k(model.spec);
  k.bind(model.params.values);
  return k.forward(t, x);
}

}  // namespace qpinn
