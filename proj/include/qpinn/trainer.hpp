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
 * @file trainer.hpp
 * @brief Adam training loop with adaptive loss weights and resampling.
 *
 * One epoch:
 *   1. adaptive weights from the full training set (w = 1 / |grad L_term|),
 *   2. four optimizer steps, one per contiguous slice of every point set,
 *   3. validation loss with the same weights; the training side of the
 *      resampling test is the mean of the four batch losses,
 *   4. MSE against the reference every `eval_every` epochs and at the end.
 */

#include <qpinn/errors.hpp>
#include <qpinn/netlib.hpp>
#include <qpinn/pdeset.hpp>
#include <qpinn/refsolve.hpp>
#include <qpinn/sampler.hpp>

#include <chrono>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace qpinn {

struct AdamState {
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

  std::vector<double> m;
  std::vector<double> v;
  long step = 0;

  AdamState() = default;
  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

/// Bias-corrected Adam update. Throws NumericalError on a non-finite
/// gradient and leaves the parameters untouched in that case.
inline void adam_step(AdamState& s, ParamVector& params,
                      std::span<const double> grad, double lr) {
  if (s.m.size() != params.size() || grad.size() != params.size())
    throw StructuralError("adam_step: length mismatch");
  for (double g : grad)
    if (!std::isfinite(g)) throw NumericalError("adam_step: non-finite gradient");
  ++s.step;
  const double c1 = 1.0 - std::pow(AdamState::kBeta1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(AdamState::kBeta2, static_cast<double>(s.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    s.m[i] = AdamState::kBeta1 * s.m[i] + (1.0 - AdamState::kBeta1) * grad[i];
    s.v[i] = AdamState::kBeta2 * s.v[i] + (1.0 - AdamState::kBeta2) * grad[i] * grad[i];
    const double mh = s.m[i] / c1;
    const double vh = s.v[i] / c2;
    params[i] -= lr * mh / (std::sqrt(vh) + AdamState::kEps);
  }
}

/// Exponential decay from `initial` at epoch 0 to `final` at `budget`.
struct LrSchedule {
  double initial = 0.01;
  double final = 0.001;

  double at(int epoch, int budget) const {
    if (budget <= 0) return initial;
    return initial * std::pow(final / initial,
                              static_cast<double>(epoch) / static_cast<double>(budget));
  }
};

inline double lr_at(int epoch, int budget) { return LrSchedule{}.at(epoch, budget); }

struct AdaptiveWeights {
  static constexpr double kNormFloor = 1e-12;
  double w_bounds = 1.0;
  double w_pde = 1.0;
};

inline double l2_norm(std::span<const double> g) {
  double s = 0.0;
  for (double v : g) s += v * v;
  return std::sqrt(s);
}

/// Inverse gradient norms; a norm below the floor keeps the previous weight.
inline AdaptiveWeights update_weights(const AdaptiveWeights& prev,
                                      std::span<const double> grad_bounds,
                                      std::span<const double> grad_pde) {
  AdaptiveWeights w = prev;
  const double nb = l2_norm(grad_bounds), np = l2_norm(grad_pde);
  if (std::isfinite(nb) && nb > AdaptiveWeights::kNormFloor) w.w_bounds = 1.0 / nb;
  if (std::isfinite(np) && np > AdaptiveWeights::kNormFloor) w.w_pde = 1.0 / np;
  return w;
}

inline AdaptiveWeights update_weights(const ModelHandle& model,
                                      const PdeProblem& problem,
                                      const CollocationSet& train,
                                      const AdaptiveWeights& prev = {}) {
  LossEvaluator ev(model.spec, problem);
  ev.bind(model.params.values);
  LossGradients g;
  ev.loss_and_grads(train, g);
  return update_weights(prev, g.bounds, g.pde);
}

struct TrainConfig {
  int epochs = 20000;
  int batches = 4;
  int eval_every = 100;
  int points = 1024;
  std::uint64_t seed = 0;
  LrSchedule lr;
  bool adaptive_weights = true;
  bool resample = true;
  double w_bounds = 1.0;  ///< initial (and, without adaptation, fixed) weights
  double w_pde = 1.0;

  void validate() const {
    if (epochs < 0) throw ConfigError("train: negative epoch budget");
    if (eval_every < 1) throw ConfigError("train: eval cadence must be positive");
    if (epochs != 0 && epochs < eval_every)
      throw ConfigError("train: epoch budget below the evaluation cadence");
    if (!supported_point_count(points))
      throw ConfigError("train: unsupported point count " + std::to_string(points));
    if (batches < 1 || points % batches != 0 || (points / batches) % 2 != 0)
      throw ConfigError("train: batches must split every point set evenly");
    if (!(w_bounds > 0.0) || !(w_pde > 0.0))
      throw ConfigError("train: weights must be positive");
    if (!(lr.initial > 0.0) || !(lr.final > 0.0))
      throw ConfigError("train: learning rates must be positive");
  }
};

struct MetricsRow {
  int epoch = 0;
  LossBreakdown train;      ///< epoch mean over batches (full set at epoch 0)
  double train_total = 0.0; ///< weighted
  double val_total = 0.0;   ///< weighted, same weights
  double w_bounds = 1.0;
  double w_pde = 1.0;
  double lr = 0.0;
  std::optional<double> mse;
  bool resampled = false;

  /// L_bounds + L_pde, comparable across weighting schemes.
  double train_unweighted() const { return train.bounds() + train.pde; }
};

struct MetricsLog {
  std::vector<MetricsRow> rows;

  int resample_count() const {
    int n = 0;
    for (const auto& r : rows) n += r.resampled;
    return n;
  }
  std::optional<double> final_mse() const {
    for (auto it = rows.rbegin(); it != rows.rend(); ++it)
      if (it->mse) return it->mse;
    return std::nullopt;
  }
};

/// Thrown when a loss or gradient turns non-finite. Carries the last
/// parameters at which the loss was finite and the log up to that point.
class TrainingAborted : public NumericalError {
 public:
  TrainingAborted(const std::string& what, ModelHandle last_good, MetricsLog log,
                  int epoch)
      : NumericalError(what),
        last_good(std::move(last_good)),
        log(std::move(log)),
        epoch(epoch) {}

  ModelHandle last_good;
  MetricsLog log;
  int epoch;
};

struct TrainResult {
  ModelHandle model;
  MetricsLog log;
  double wall_seconds = 0.0;
};

/// Optional observer, called after every logged row.
using TrainObserver = std::function<void(const MetricsRow&, const ModelHandle&)>;

namespace detail {

inline CollocationView batch_view(const CollocationSet& s, int b, int batches) {
  auto slice = [&](const std::vector<Point>& v) {
    const std::size_t len = v.size() / batches;
    return std::span<const Point>(v).subspan(b * len, len);
  };
  return {slice(s.interior), slice(s.initial), slice(s.boundary)};
}

}  // namespace detail

inline TrainResult train(ModelHandle model, const PdeProblem& problem,
                         const TrainConfig& cfg, const MseGrid& grid,
                         const TrainObserver& observer = {}) {
  cfg.validate();
  problem.validate();
  const auto clock_start = std::chrono::steady_clock::now();
  const std::size_t np = model.params.size();

  CollocationSampler sampler(cfg.points, cfg.seed, problem.domain);
  auto [train_set, val_set] = sampler.draw();
  LossEvaluator ev(model.spec, problem);
  ModelBatch<1> mse_kernel(model.spec);
  AdamState adam(np);
  AdaptiveWeights w{cfg.w_bounds, cfg.w_pde};
  LossGradients g;
  std::vector<double> step_grad(np);
  MetricsLog log;
  ModelHandle last_good = model;

  auto eval_mse = [&] {
    mse_kernel.bind(model.params.values);
    return grid.mse(mse_kernel);
  };
  auto abort = [&](const std::string& why, int epoch) {
    throw TrainingAborted(why, last_good, log, epoch);
  };
  auto emit = [&](const MetricsRow& row) {
    log.rows.push_back(row);
    if (observer) observer(row, model);
  };

  {
    ev.bind(model.params.values);
    MetricsRow row;
    row.epoch = 0;
    row.train = ev.loss(train_set);
    row.train_total = weighted_loss(row.train, w.w_bounds, w.w_pde);
    row.val_total = weighted_loss(ev.loss(val_set), w.w_bounds, w.w_pde);
    row.w_bounds = w.w_bounds;
    row.w_pde = w.w_pde;
    row.lr = cfg.lr.at(0, cfg.epochs);
    row.mse = eval_mse();
    if (!std::isfinite(row.train_total) || !std::isfinite(row.val_total))
      abort("train: non-finite initial loss", 0);
    emit(row);
  }

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (cfg.adaptive_weights) {
      ev.bind(model.params.values);
      ev.loss_and_grads(train_set, g);
      w = update_weights(w, g.bounds, g.pde);
    }
    const double lr = cfg.lr.at(epoch, cfg.epochs);
    MetricsRow row;
    row.epoch = epoch;
    row.w_bounds = w.w_bounds;
    row.w_pde = w.w_pde;
    row.lr = lr;
    for (int b = 0; b < cfg.batches; ++b) {
      ev.bind(model.params.values);
      ev.loss_and_grads(detail::batch_view(train_set, b, cfg.batches), g);
      const double total = weighted_loss(g.loss, w.w_bounds, w.w_pde);
      if (!std::isfinite(total)) abort("train: non-finite batch loss", epoch);
      last_good.params = model.params;
      last_good.epoch = epoch - 1;
      for (std::size_t i = 0; i < np; ++i)
        step_grad[i] = w.w_bounds * g.bounds[i] + w.w_pde * g.pde[i];
      try {
        adam_step(adam, model.params, step_grad, lr);
      } catch (const NumericalError& e) {
        abort(e.what(), epoch);
      }
      row.train.pde += g.loss.pde;
      row.train.t += g.loss.t;
      row.train.x += g.loss.x;
      row.train_total += total;
    }
    const double inv = 1.0 / cfg.batches;
    row.train.pde *= inv;
    row.train.t *= inv;
    row.train.x *= inv;
    row.train_total *= inv;
    model.epoch = epoch;

    ev.bind(model.params.values);
    row.val_total = weighted_loss(ev.loss(val_set), w.w_bounds, w.w_pde);
    if (!std::isfinite(row.val_total)) abort("train: non-finite validation loss", epoch);
    if (cfg.resample && should_resample(row.train_total, row.val_total)) {
      row.resampled = true;
      std::tie(train_set, val_set) = sampler.draw();
    }
    if (epoch % cfg.eval_every == 0 || epoch == cfg.epochs) row.mse = eval_mse();
    emit(row);
  }

  const double wall = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - clock_start)
                          .count();
  return {std::move(model), std::move(log), wall};
}

inline TrainResult train(ModelHandle model, const PdeProblem& problem,
                         const TrainConfig& cfg, const ReferenceSolution& ref,
                         const TrainObserver& observer = {}) {
  return train(std::move(model), problem, cfg, MseGrid(ref), observer);
}

}  // namespace qpinn
