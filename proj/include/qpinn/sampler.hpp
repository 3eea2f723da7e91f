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
 * @file sampler.hpp
 * @brief Sobol collocation sampling and validation-triggered resampling.
 *
 * Dimension 1 uses the van der Corput direction numbers, dimension 2 the
 * primitive polynomial x + 1 (s = 1, a = 0, m_1 = 1), matching the
 * Joe-Kuo tables. Points are generated in Gray-code order, so the unshifted
 * stream reproduces the canonical sequence 0, 1/2, 3/4, 1/4, ...
 * Randomisation is a digital shift: every coordinate is XOR-ed with a fixed
 * 32-bit word drawn from the run seed.
 */

#include <qpinn/errors.hpp>
#include <qpinn/pdeset.hpp>

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace qpinn {

class SobolStream {
 public:
  static constexpr int kBits = 32;

  explicit SobolStream(int dim, std::array<std::uint32_t, 2> shift = {0, 0})
      : dim_(dim), shift_(shift) {
    if (dim < 1 || dim > 2)
      throw ConfigError("sobol: only dimensions 1 and 2 are supported");
  }

  int dim() const { return dim_; }
  std::uint32_t index() const { return index_; }

  /// Direction number k (0-based) of dimension d.
  static std::uint32_t direction(int d, int k) {
    static const auto table = [] {
      std::array<std::array<std::uint32_t, kBits>, 2> v{};
      for (int k = 0; k < kBits; ++k) v[0][k] = 1u << (kBits - 1 - k);
      v[1][0] = 1u << (kBits - 1);
      for (int k = 1; k < kBits; ++k) v[1][k] = v[1][k - 1] ^ (v[1][k - 1] >> 1);
      return v;
    }();
    return table[d][k];
  }

  /// Next point; the origin (index 0) is skipped.
  std::array<double, 2> next() {
    const int c = std::countr_zero(++index_);
    if (c >= kBits) throw NumericalError("sobol: stream exhausted");
    std::array<double, 2> out{0.0, 0.0};
    for (int d = 0; d < dim_; ++d) {
      state_[d] ^= direction(d, c);
      out[d] = static_cast<double>(state_[d] ^ shift_[d]) * 0x1p-32;
    }
    return out;
  }

 private:
  int dim_;
  std::array<std::uint32_t, 2> shift_;
  std::array<std::uint32_t, 2> state_{0, 0};
  std::uint32_t index_ = 0;
};

inline std::array<double, 2> sobol_next(SobolStream& s) { return s.next(); }

/// Point counts must split into 4 batches and two walls with Sobol balance:
/// powers of two, at least 8.
inline bool supported_point_count(int n) {
  return n >= 8 && std::has_single_bit(static_cast<unsigned>(n));
}

/// Digital shifts for the three streams of one collocation set.
struct SetShifts {
  std::array<std::uint32_t, 2> interior{};
  std::uint32_t initial = 0;
  std::array<std::uint32_t, 2> boundary{};

  bool operator==(const SetShifts&) const = default;
};

namespace detail {

// Half a cell of the 32-bit lattice keeps every coordinate strictly inside
// (0, 1) without moving the point by more than 2^-33.
inline double open_unit(double u) { return u + 0x1p-33; }

}  // namespace detail

inline CollocationSet build_set(int n, const Domain& d, const SetShifts& sh) {
  if (!supported_point_count(n))
    throw ConfigError("sampler: unsupported point count " + std::to_string(n));
  d.validate();
  CollocationSet s;
  s.interior.reserve(n);
  s.initial.reserve(n);
  s.boundary.reserve(n);
  const double span_x = d.x_hi - d.x_lo;
  SobolStream in(2, sh.interior);
  for (int i = 0; i < n; ++i) {
    const auto u = in.next();
    s.interior.push_back({detail::open_unit(u[0]) * d.t_end,
                          d.x_lo + detail::open_unit(u[1]) * span_x});
  }
  SobolStream t0(1, {sh.initial, 0});
  for (int i = 0; i < n; ++i)
    s.initial.push_back({0.0, d.x_lo + detail::open_unit(t0.next()[0]) * span_x});
  // Walls interleaved so that contiguous batches see both of them.
  SobolStream walls(2, sh.boundary);
  for (int i = 0; i < n / 2; ++i) {
    const auto u = walls.next();
    s.boundary.push_back({detail::open_unit(u[0]) * d.t_end, d.x_lo});
    s.boundary.push_back({detail::open_unit(u[1]) * d.t_end, d.x_hi});
  }
  return s;
}

/**
 * Owns the seed sequence of one run and draws (train, validation) pairs.
 * Every draw uses fresh shifts, and the validation shifts never equal the
 * training shifts.
 */
class CollocationSampler {
 public:
  CollocationSampler(int n, std::uint64_t seed, Domain domain = {})
      : n_(n), domain_(domain), rng_(seed ^ 0x5eed5a3b1e0fULL) {
    if (!supported_point_count(n))
      throw ConfigError("sampler: unsupported point count " + std::to_string(n));
    domain_.validate();
  }

  int n() const { return n_; }
  int draws() const { return draws_; }

  std::pair<CollocationSet, CollocationSet> draw() {
    const SetShifts train = shifts();
    SetShifts val = shifts();
    while (val == train) val = shifts();
    last_ = {train, val};
    ++draws_;
    return {build_set(n_, domain_, train), build_set(n_, domain_, val)};
  }

  const std::pair<SetShifts, SetShifts>& last_shifts() const { return last_; }

 private:
  SetShifts shifts() {
    SetShifts s;
    s.interior = {word(), word()};
    s.initial = word();
    s.boundary = {word(), word()};
    return s;
  }
  std::uint32_t word() { return static_cast<std::uint32_t>(rng_() >> 32); }

  int n_;
  Domain domain_;
  std::mt19937_64 rng_;
  int draws_ = 0;
  std::pair<SetShifts, SetShifts> last_;
};

inline std::pair<CollocationSet, CollocationSet> sample_sets(
    int n, std::uint64_t seed, const Domain& domain = {}) {
  CollocationSampler s(n, seed, domain);
  return s.draw();
}

/// Resampling trigger: validation loss above 1.1 times the training loss.
inline bool should_resample(double train_loss, double val_loss) {
  if (!std::isfinite(train_loss) || !std::isfinite(val_loss))
    throw StructuralError("should_resample: non-finite loss");
  if (train_loss < 0.0 || val_loss < 0.0)
    throw StructuralError("should_resample: negative loss");
  return val_loss > 1.1 * train_loss;
}

}  // namespace qpinn
