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
 * @file bench.hpp
 * @brief Experiment matrix, aggregation (median curves, epoch/MSE ratios,
 *        success ratios) and model probes.
 */

#include <qpinn/batch.hpp>
#include <qpinn/errors.hpp>
#include <qpinn/io.hpp>
#include <qpinn/netlib.hpp>
#include <qpinn/pdeset.hpp>
#include <qpinn/refsolve.hpp>
#include <qpinn/trainer.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace qpinn {

/// Bumped whenever a change alters training trajectories. Stored results
/// from a different revision are never reused by resume.
inline constexpr const char* kNumericsRevision = "qpinn-numerics-3";

// ===========================================================================
// Curves

struct Curve {
  std::vector<int> epochs;
  std::vector<double> values;

  std::size_t size() const { return epochs.size(); }
  bool empty() const { return epochs.empty(); }
};

/// MSE at every evaluated epoch of a log.
inline Curve mse_curve(const MetricsLog& log) {
  Curve c;
  for (const auto& r : log.rows)
    if (r.mse) {
      c.epochs.push_back(r.epoch);
      c.values.push_back(*r.mse);
    }
  return c;
}

/// Unweighted training loss L_bounds + L_pde at the MSE evaluation epochs,
/// so that runs with different weighting schemes can be compared.
inline Curve train_loss_curve(const MetricsLog& log) {
  Curve c;
  for (const auto& r : log.rows)
    if (r.mse) {
      c.epochs.push_back(r.epoch);
      c.values.push_back(r.train_unweighted());
    }
  return c;
}

/// Pointwise median over curves sharing one epoch grid; for an even count
/// the lower of the two middle values is used.
inline Curve median_curve(std::span<const Curve> curves) {
  if (curves.empty()) throw StructuralError("median_curve: no curves");
  for (const auto& c : curves) {
    if (c.epochs != curves[0].epochs)
      throw StructuralError("median_curve: curves do not share an evaluation cadence");
    if (c.values.size() != c.epochs.size())
      throw StructuralError("median_curve: malformed curve");
  }
  Curve out;
  out.epochs = curves[0].epochs;
  std::vector<double> col(curves.size());
  for (std::size_t i = 0; i < out.epochs.size(); ++i) {
    for (std::size_t k = 0; k < curves.size(); ++k) col[k] = curves[k].values[i];
    const std::size_t mid = (col.size() - 1) / 2;
    std::nth_element(col.begin(), col.begin() + static_cast<std::ptrdiff_t>(mid), col.end());
    out.values.push_back(col[mid]);
  }
  return out;
}

inline Curve median_curve(std::span<const MetricsLog> logs) {
  std::vector<Curve> cs;
  for (const auto& l : logs) cs.push_back(mse_curve(l));
  return median_curve(std::span<const Curve>(cs));
}

/// First epoch whose value is at or below the threshold.
inline std::optional<int> epochs_to_reach(const Curve& c, double threshold) {
  if (c.empty()) throw StructuralError("epochs_to_reach: empty curve");
  for (std::size_t i = 0; i < c.size(); ++i)
    if (c.values[i] <= threshold) return c.epochs[i];
  return std::nullopt;
}

// ===========================================================================
// Ratio curves

struct EpochRatioEntry {
  double threshold = 0.0;
  std::optional<int> q_epoch;  ///< nullopt: not reached
  std::optional<int> c_epoch;
  std::optional<double> ratio;  ///< defined only if both reached
};

struct MseRatioEntry {
  int epoch = 0;
  double q = 0.0;
  double c = 0.0;
  std::optional<double> ratio;  ///< undefined if the classical MSE is 0
};

struct RatioCurves {
  std::vector<EpochRatioEntry> epoch_ratio;  ///< thresholds descending
  bool threshold_range_empty = false;        ///< explicit marker
  std::vector<MseRatioEntry> mse_ratio;
  double accuracy_limit = 0.0;  ///< final qPINN MSE
};

/// Log-spaced values 10^(m / per_decade) inside [lo, hi], descending.
inline std::vector<double> threshold_ladder(double hi, double lo, int per_decade = 8) {
  std::vector<double> out;
  if (!(lo > 0.0) || !(hi >= lo) || per_decade < 1) return out;
  constexpr double kSlack = 1e-12;
  const int m_hi = static_cast<int>(std::floor(per_decade * std::log10(hi) + 1e-9));
  const int m_lo = static_cast<int>(std::ceil(per_decade * std::log10(lo) - 1e-9));
  for (int m = m_hi; m >= m_lo; --m) {
    const double v = std::pow(10.0, static_cast<double>(m) / per_decade);
    if (v <= hi * (1 + kSlack) && v >= lo * (1 - kSlack)) out.push_back(v);
  }
  return out;
}

inline RatioCurves ratio_curves(const Curve& q, const Curve& c, int per_decade = 8) {
  if (q.empty() || c.empty()) throw StructuralError("ratio_curves: empty curve");
  RatioCurves r;
  r.accuracy_limit = q.values.back();

  std::map<int, double> cm;
  for (std::size_t i = 0; i < c.size(); ++i) cm[c.epochs[i]] = c.values[i];
  for (std::size_t i = 0; i < q.size(); ++i) {
    const auto it = cm.find(q.epochs[i]);
    if (it == cm.end()) continue;
    MseRatioEntry e{q.epochs[i], q.values[i], it->second, std::nullopt};
    if (it->second > 0.0) e.ratio = q.values[i] / it->second;
    r.mse_ratio.push_back(e);
  }

  const double hi = std::max(q.values.front(), c.values.front());
  const double lo = std::min(q.values.back(), c.values.back());
  const auto ladder = threshold_ladder(hi, lo, per_decade);
  r.threshold_range_empty = ladder.empty();
  for (double th : ladder) {
    EpochRatioEntry e{th, epochs_to_reach(q, th), epochs_to_reach(c, th), std::nullopt};
    if (e.q_epoch && e.c_epoch && *e.c_epoch > 0)
      e.ratio = static_cast<double>(*e.q_epoch) / *e.c_epoch;
    r.epoch_ratio.push_back(e);
  }
  return r;
}

inline constexpr const char* kNotReached = "not_reached";

inline std::string epoch_ratio_csv(const RatioCurves& r) {
  std::string s = "threshold,q_epoch,c_epoch,epoch_ratio\n";
  auto cell = [](const auto& opt) {
    if (!opt) return std::string(kNotReached);
    if constexpr (std::is_same_v<std::decay_t<decltype(*opt)>, int>)
      return std::to_string(*opt);
    else
      return format_double(*opt);
  };
  for (const auto& e : r.epoch_ratio)
    s += format_double(e.threshold) + "," + cell(e.q_epoch) + "," + cell(e.c_epoch) +
         "," + cell(e.ratio) + "\n";
  return s;
}

inline std::string mse_ratio_csv(const RatioCurves& r) {
  std::string s = "epoch,mse_q,mse_c,mse_ratio\n";
  for (const auto& e : r.mse_ratio)
    s += std::to_string(e.epoch) + "," + format_double(e.q) + "," + format_double(e.c) +
         "," + (e.ratio ? format_double(*e.ratio) : std::string(kNotReached)) + "\n";
  return s;
}

inline std::string curve_csv(const Curve& c, const char* value_name = "mse") {
  std::string s = std::string("epoch,") + value_name + "\n";
  for (std::size_t i = 0; i < c.size(); ++i)
    s += std::to_string(c.epochs[i]) + "," + format_double(c.values[i]) + "\n";
  return s;
}

inline Curve parse_curve_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("epoch,", 0) != 0)
    throw ConfigError("curve csv: expected a header starting with 'epoch,'");
  Curve c;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 2) throw ConfigError("curve csv: expected two columns");
    c.epochs.push_back(static_cast<int>(parse_double(cells[0], "epoch")));
    c.values.push_back(parse_double(cells[1], "value"));
  }
  return c;
}

// ===========================================================================
// Experiment matrix

enum class ModelKind { CPinn, QPinn };

inline std::string kind_name(ModelKind k) { return k == ModelKind::CPinn ? "cpinn" : "qpinn"; }

inline ModelKind parse_kind(const std::string& s) {
  if (s == "cpinn") return ModelKind::CPinn;
  if (s == "qpinn") return ModelKind::QPinn;
  throw ConfigError("unknown model kind '" + s + "'");
}

struct ExperimentMatrix {
  std::vector<BoundaryFamily> families{BoundaryFamily::xsin()};
  std::vector<double> Ls{0.01, 0.1, 1.0};
  std::vector<double> Ns{0.0, 1.0};
  std::vector<int> params{100, 150, 200, 250};
  std::vector<int> points{256, 512, 1024};
  std::vector<std::uint64_t> seeds{0, 1, 2};
  std::vector<ModelKind> kinds{ModelKind::CPinn, ModelKind::QPinn};
  int epochs_cpinn = 100000;
  int epochs_qpinn = 20000;
  int eval_every = 100;
  std::vector<int> cpinn_depths{1, 2, 3, 4, 5, 6};
  std::vector<int> qpinn_depth_c{0, 1};
  EncodingSchedule encoding = EncodingSchedule::Alternating;
  bool adaptive_weights = true;
  bool resample = true;
  double success_threshold = 1e-2;
  SolverConfig solver;

  void validate() const {
    auto nonempty = [](bool ok, const char* what) {
      if (!ok) throw ConfigError(std::string("matrix: empty ") + what + " list");
    };
    nonempty(!families.empty(), "family");
    nonempty(!Ls.empty(), "L");
    nonempty(!Ns.empty(), "N");
    nonempty(!params.empty(), "parameter-count");
    nonempty(!points.empty(), "point-count");
    nonempty(!seeds.empty(), "seed");
    nonempty(!kinds.empty(), "kind");
    nonempty(!cpinn_depths.empty(), "cPINN depth");
    nonempty(!qpinn_depth_c.empty(), "qPINN depth");
    for (int d : cpinn_depths)
      if (d < 1) throw ConfigError("matrix: cPINN depths start at 1");
    if (!(success_threshold >= 0.0)) throw ConfigError("matrix: negative success threshold");
  }
};

struct Cell {
  PdeProblem problem;
  ModelKind kind = ModelKind::CPinn;
  int params = 0;
  int points = 0;

  std::string id() const {
    auto g = [](double v) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.6g", v);
      return std::string(buf);
    };
    std::string fam = problem.family.name();
    if (problem.family.kind == BoundaryFamily::Kind::XSinC) fam += g(problem.family.c);
    return kind_name(kind) + "_" + fam + "_L" + g(problem.L) + "_N" + g(problem.N) + "_P" +
           std::to_string(params) + "_n" + std::to_string(points);
  }
};

/// One training run: a cell, a seed and an architecture candidate
/// (hidden depth for cPINNs, classical depth for qPINNs).
struct RunSpec {
  Cell cell;
  std::uint64_t seed = 0;
  int candidate = 0;
  TrainConfig train;

  std::string id() const {
    return cell.id() + "_s" + std::to_string(seed) +
           (cell.kind == ModelKind::CPinn ? "_d" : "_dc") + std::to_string(candidate);
  }
};

/// Cells in a fixed nesting order: family, L, N, params, points, kind.
inline std::vector<Cell> enumerate_cells(const ExperimentMatrix& m) {
  m.validate();
  std::vector<Cell> out;
  for (const auto& fam : m.families)
    for (double L : m.Ls)
      for (double N : m.Ns)
        for (int P : m.params)
          for (int n : m.points)
            for (ModelKind k : m.kinds) {
              Cell c;
              c.problem.L = L;
              c.problem.N = N;
              c.problem.family = fam;
              c.problem.validate();
              c.kind = k;
              c.params = P;
              c.points = n;
              out.push_back(c);
            }
  return out;
}

inline std::vector<RunSpec> enumerate_runs(const ExperimentMatrix& m) {
  std::vector<RunSpec> out;
  for (const Cell& c : enumerate_cells(m))
    for (std::uint64_t seed : m.seeds) {
      const auto& cands = c.kind == ModelKind::CPinn ? m.cpinn_depths : m.qpinn_depth_c;
      for (int cand : cands) {
        RunSpec r;
        r.cell = c;
        r.seed = seed;
        r.candidate = cand;
        r.train.epochs = c.kind == ModelKind::CPinn ? m.epochs_cpinn : m.epochs_qpinn;
        r.train.eval_every = m.eval_every;
        r.train.points = c.points;
        r.train.seed = seed;
        r.train.adaptive_weights = m.adaptive_weights;
        r.train.resample = m.resample;
        r.train.validate();
        out.push_back(r);
      }
    }
  return out;
}

inline ModelSpec plan_candidate(const RunSpec& r, EncodingSchedule enc) {
  return r.cell.kind == ModelKind::CPinn ? ModelSpec(plan_cpinn(r.cell.params, r.candidate))
                                         : ModelSpec(plan_qpinn(r.cell.params, r.candidate, enc));
}

struct RunRecord {
  std::string run_id;
  std::string cell_id;
  ModelKind kind = ModelKind::CPinn;
  PdeProblem problem;
  int target_params = 0;
  int actual_params = 0;
  int points = 0;
  int candidate = 0;
  std::uint64_t seed = 0;
  std::optional<double> final_mse;
  bool aborted = false;
  std::string error;
  int resample_count = 0;
  double wall_seconds = 0.0;

  /// Selection score: aborted or unevaluated runs rank last.
  double score() const {
    return (!aborted && final_mse) ? *final_mse : std::numeric_limits<double>::infinity();
  }
};

struct RunOutcome {
  RunRecord record;
  MetricsLog log;
  std::optional<ModelHandle> model;  ///< absent when loaded from a resume
};

/// Trains one run. A numerical abort is captured in the record together
/// with the log up to the last finite step.
inline RunOutcome execute_run(const RunSpec& spec, const MseGrid& grid,
                              EncodingSchedule enc = EncodingSchedule::Alternating) {
  RunOutcome out;
  RunRecord& rec = out.record;
  rec.run_id = spec.id();
  rec.cell_id = spec.cell.id();
  rec.kind = spec.cell.kind;
  rec.problem = spec.cell.problem;
  rec.target_params = spec.cell.params;
  rec.points = spec.cell.points;
  rec.candidate = spec.candidate;
  rec.seed = spec.seed;
  ModelHandle model = make_model(plan_candidate(spec, enc), spec.seed, spec.cell.params);
  rec.actual_params = model.actual_params();
  try {
    TrainResult res = train(std::move(model), spec.cell.problem, spec.train, grid);
    out.log = std::move(res.log);
    rec.wall_seconds = res.wall_seconds;
    out.model = std::move(res.model);
  } catch (const TrainingAborted& e) {
    rec.aborted = true;
    rec.error = e.what();
    out.log = e.log;
    out.model = e.last_good;
  }
  rec.final_mse = out.log.final_mse();
  rec.resample_count = out.log.resample_count();
  return out;
}

struct MatrixResult {
  std::vector<RunOutcome> runs;        ///< enumeration order
  std::vector<std::size_t> representatives;  ///< indices into runs, one per (cell, seed)

  std::vector<RunRecord> records() const {
    std::vector<RunRecord> r;
    for (const auto& o : runs) r.push_back(o.record);
    return r;
  }
  std::vector<RunRecord> representative_records() const {
    std::vector<RunRecord> r;
    for (std::size_t i : representatives) r.push_back(runs[i].record);
    return r;
  }
};

/// Per (cell, seed): the candidate with the smallest final MSE; ties go to
/// the first candidate in enumeration order.
inline std::vector<std::size_t> select_representatives(const std::vector<RunOutcome>& runs) {
  std::vector<std::size_t> out;
  std::map<std::pair<std::string, std::uint64_t>, std::size_t> best;
  std::vector<std::pair<std::string, std::uint64_t>> order;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto key = std::make_pair(runs[i].record.cell_id, runs[i].record.seed);
    auto it = best.find(key);
    if (it == best.end()) {
      best.emplace(key, i);
      order.push_back(key);
    } else if (runs[i].record.score() < runs[it->second].record.score()) {
      it->second = i;
    }
  }
  for (const auto& k : order) out.push_back(best.at(k));
  return out;
}

inline std::string records_csv(std::span<const RunRecord> recs) {
  std::string s =
      "run_id,cell_id,kind,family,c,L,N,target_params,actual_params,points,candidate,"
      "seed,final_mse,aborted,resample_count\n";
  for (const auto& r : recs) {
    s += r.run_id + "," + r.cell_id + "," + kind_name(r.kind) + "," +
         r.problem.family.name() + "," + format_double(r.problem.family.c) + "," +
         format_double(r.problem.L) + "," + format_double(r.problem.N) + "," +
         std::to_string(r.target_params) + "," + std::to_string(r.actual_params) + "," +
         std::to_string(r.points) + "," + std::to_string(r.candidate) + "," +
         std::to_string(r.seed) + "," +
         (r.final_mse ? format_double(*r.final_mse) : std::string(kNotReached)) + "," +
         (r.aborted ? "1" : "0") + "," + std::to_string(r.resample_count) + "\n";
  }
  return s;
}

struct MatrixOptions {
  int parallelism = 1;
  /// Per-run CSV/JSON/checkpoint files plus merged tables go here if set.
  std::optional<std::filesystem::path> out_dir;
  /// Reuse finished runs found in out_dir when their stored key matches.
  bool resume = false;
  std::function<void(const RunRecord&, std::size_t done, std::size_t total)> progress;
};

namespace detail {

inline std::string resume_key(const RunSpec& r, const ExperimentMatrix& m) {
  Json j = {{"revision", kNumericsRevision},
            {"run_id", r.id()},
            {"problem", problem_to_json(r.cell.problem)},
            {"training", train_config_to_json(r.train)},
            {"encoding", encoding_name(m.encoding)},
            {"solver", solver_config_to_json(m.solver)}};
  return j.dump();
}

inline std::optional<RunOutcome> try_resume(const RunSpec& spec, const ExperimentMatrix& m,
                                            const std::filesystem::path& dir) {
  const auto js = dir / (spec.id() + ".json");
  const auto csv = dir / (spec.id() + ".csv");
  if (!std::filesystem::exists(js) || !std::filesystem::exists(csv)) return std::nullopt;
  try {
    const Json s = Json::parse(read_text(js));
    if (s.value("resume_key", "") != resume_key(spec, m)) return std::nullopt;
    RunOutcome o;
    o.log = read_metrics(csv);
    auto& rec = o.record;
    rec.run_id = spec.id();
    rec.cell_id = spec.cell.id();
    rec.kind = spec.cell.kind;
    rec.problem = spec.cell.problem;
    rec.target_params = spec.cell.params;
    rec.actual_params = s.value("actual_params", 0);
    rec.points = spec.cell.points;
    rec.candidate = spec.candidate;
    rec.seed = spec.seed;
    rec.aborted = s.value("status", "ok") != "ok";
    rec.error = s.value("error", "");
    rec.wall_seconds = s.value("wall_seconds", 0.0);
    rec.final_mse = o.log.final_mse();
    rec.resample_count = o.log.resample_count();
    return o;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

inline void store_run(const RunSpec& spec, const ExperimentMatrix& m, const RunOutcome& o,
                      const std::filesystem::path& dir) {
  write_metrics(o.log, dir / (spec.id() + ".csv"));
  if (o.model) save_checkpoint(*o.model, dir / (spec.id() + ".ckpt.json"));
  ModelHandle shell = make_model(plan_candidate(spec, m.encoding), spec.seed, spec.cell.params);
  Json s = run_summary(spec.id(), spec.cell.problem, o.model ? *o.model : shell, spec.train,
                       o.log, o.record.wall_seconds, o.record.aborted ? "aborted" : "ok");
  if (o.record.aborted) s["error"] = o.record.error;
  s["resume_key"] = resume_key(spec, m);
  write_text(dir / (spec.id() + ".json"), s.dump(2) + "\n");
}

}  // namespace detail

inline MatrixResult run_matrix(const ExperimentMatrix& m, const MatrixOptions& opt = {}) {
  const auto specs = enumerate_runs(m);

  // One reference and evaluation grid per distinct problem, built up front.
  std::vector<PdeProblem> problems;
  for (const auto& s : specs)
    if (std::find(problems.begin(), problems.end(), s.cell.problem) == problems.end())
      problems.push_back(s.cell.problem);
  std::vector<MseGrid> grids;
  for (const auto& p : problems) {
    if (opt.out_dir) {
      ReferenceCache cache(*opt.out_dir / "references");
      grids.emplace_back(cache.get(p, m.solver));
    } else {
      grids.emplace_back(solve(p, m.solver));
    }
  }
  auto grid_for = [&](const PdeProblem& p) -> const MseGrid& {
    return grids[std::find(problems.begin(), problems.end(), p) - problems.begin()];
  };

  const std::filesystem::path run_dir = opt.out_dir ? *opt.out_dir / "runs" : "";
  MatrixResult result;
  result.runs.resize(specs.size());
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::mutex report_mutex;
  std::exception_ptr failure;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next++;
      if (i >= specs.size()) return;
      try {
        std::optional<RunOutcome> o;
        if (opt.out_dir && opt.resume) o = detail::try_resume(specs[i], m, run_dir);
        if (!o) {
          o = execute_run(specs[i], grid_for(specs[i].cell.problem), m.encoding);
          if (opt.out_dir) detail::store_run(specs[i], m, *o, run_dir);
        }
        result.runs[i] = std::move(*o);
        const std::size_t d = ++done;
        if (opt.progress) {
          std::lock_guard lock(report_mutex);
          opt.progress(result.runs[i].record, d, specs.size());
        }
      } catch (...) {
        std::lock_guard lock(report_mutex);
        if (!failure) failure = std::current_exception();
        next = specs.size();
        return;
      }
    }
  };
  const int threads = std::max(1, opt.parallelism);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  result.representatives = select_representatives(result.runs);

  if (opt.out_dir) {
    const auto recs = result.records();
    const auto reps = result.representative_records();
    write_text(*opt.out_dir / "runs.csv", records_csv(recs));
    write_text(*opt.out_dir / "representatives.csv", records_csv(reps));
    // Median MSE curve per cell over its representative runs.
    std::map<std::string, std::vector<Curve>> per_cell;
    std::vector<std::string> cell_order;
    for (std::size_t i : result.representatives) {
      const auto& id = result.runs[i].record.cell_id;
      if (!per_cell.count(id)) cell_order.push_back(id);
      per_cell[id].push_back(mse_curve(result.runs[i].log));
    }
    std::string merged = "cell_id,epoch,median_mse\n";
    for (const auto& id : cell_order) {
      try {
        const Curve med = median_curve(std::span<const Curve>(per_cell[id]));
        for (std::size_t k = 0; k < med.size(); ++k)
          merged += id + "," + std::to_string(med.epochs[k]) + "," +
                    format_double(med.values[k]) + "\n";
      } catch (const StructuralError&) {
        // Aborted runs have truncated curves; such cells get no median row.
      }
    }
    write_text(*opt.out_dir / "median_curves.csv", merged);
  }
  return result;
}

// ===========================================================================
// Success ratio

struct SuccessGroup {
  std::string family;
  int points = 0;
  ModelKind kind = ModelKind::CPinn;
  int successes = 0;
  int total = 0;

  double ratio() const { return total == 0 ? 0.0 : static_cast<double>(successes) / total; }
};

struct SuccessReport {
  double threshold = 1e-2;
  std::vector<SuccessGroup> groups;  ///< sorted by (family, points, kind)
};

/// A run succeeds if it finished and its final MSE is at most the threshold.
inline SuccessReport success_ratio(std::span<const RunRecord> records,
                                   double threshold = 1e-2) {
  if (!(threshold >= 0.0)) throw ConfigError("success_ratio: negative threshold");
  SuccessReport rep;
  rep.threshold = threshold;
  std::map<std::tuple<std::string, int, int>, SuccessGroup> g;
  for (const auto& r : records) {
    const auto key = std::make_tuple(r.problem.family.name(), r.points, static_cast<int>(r.kind));
    auto& grp = g[key];
    grp.family = r.problem.family.name();
    grp.points = r.points;
    grp.kind = r.kind;
    ++grp.total;
    if (!r.aborted && r.final_mse && *r.final_mse <= threshold) ++grp.successes;
  }
  for (auto& [k, v] : g) rep.groups.push_back(v);
  return rep;
}

inline std::string success_csv(const SuccessReport& rep) {
  std::string s = "family,points,kind,successes,total,ratio,threshold\n";
  for (const auto& g : rep.groups)
    s += g.family + "," + std::to_string(g.points) + "," + kind_name(g.kind) + "," +
         std::to_string(g.successes) + "," + std::to_string(g.total) + "," +
         format_double(g.ratio()) + "," + format_double(rep.threshold) + "\n";
  return s;
}

/// Reads the `runs.csv` / `representatives.csv` tables written by run_matrix.
inline std::vector<RunRecord> parse_records_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  if (line.rfind("run_id,cell_id,kind,", 0) != 0)
    throw ConfigError("records csv: unexpected header");
  std::vector<RunRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = split_csv_line(line);
    if (c.size() != 15) throw ConfigError("records csv: expected 15 columns");
    RunRecord r;
    r.run_id = c[0];
    r.cell_id = c[1];
    r.kind = parse_kind(c[2]);
    r.problem.family = parse_family(c[3], parse_double(c[4], "c"));
    r.problem.L = parse_double(c[5], "L");
    r.problem.N = parse_double(c[6], "N");
    r.target_params = std::stoi(c[7]);
    r.actual_params = std::stoi(c[8]);
    r.points = std::stoi(c[9]);
    r.candidate = std::stoi(c[10]);
    r.seed = std::stoull(c[11]);
    if (c[12] != kNotReached) r.final_mse = parse_double(c[12], "final_mse");
    r.aborted = c[13] == "1";
    r.resample_count = std::stoi(c[14]);
    out.push_back(r);
  }
  return out;
}

// ===========================================================================
// Landscape slices and intermediate outputs

struct LandscapeSlice {
  int i = 0, j = 0;
  double center_i = 0.0, center_j = 0.0;
  std::vector<double> axis_i, axis_j;
  std::vector<double> values;  ///< row-major, rows follow axis_i

  double at(std::size_t a, std::size_t b) const { return values[a * axis_j.size() + b]; }
};

/// Evaluates `f` on a square grid around `center` in the (i, j) plane. The
/// middle node reproduces the center coordinates exactly.
inline LandscapeSlice landscape_slice(std::span<const double> center, int i, int j,
                                      double half_width, int resolution,
                                      const std::function<double(std::span<const double>)>& f) {
  const int n = static_cast<int>(center.size());
  if (i < 0 || j < 0 || i >= n || j >= n || i == j)
    throw StructuralError("landscape_slice: parameter indices out of range or equal");
  if (half_width < 0.0) throw ConfigError("landscape_slice: negative half-width");
  if (half_width > 0.0 && (resolution < 1 || resolution % 2 == 0))
    throw ConfigError("landscape_slice: resolution must be odd");
  const int res = half_width == 0.0 ? 1 : resolution;
  const int mid = res / 2;
  LandscapeSlice s;
  s.i = i;
  s.j = j;
  s.center_i = center[i];
  s.center_j = center[j];
  for (int k = 0; k < res; ++k) {
    const double off = mid == 0 ? 0.0 : half_width * (k - mid) / mid;
    s.axis_i.push_back(center[i] + off);
    s.axis_j.push_back(center[j] + off);
  }
  std::vector<double> p(center.begin(), center.end());
  for (int a = 0; a < res; ++a)
    for (int b = 0; b < res; ++b) {
      p[i] = s.axis_i[a];
      p[j] = s.axis_j[b];
      s.values.push_back(f(p));
    }
  return s;
}

inline LandscapeSlice landscape_slice(const ModelHandle& model, const MseGrid& grid, int i,
                                      int j, double half_width, int resolution) {
  ModelBatch<1> batch(model.spec);
  return landscape_slice(model.params.values, i, j, half_width, resolution,
                         [&](std::span<const double> p) {
                           batch.bind(p);
                           return grid.mse(batch);
                         });
}

inline std::string landscape_csv(const LandscapeSlice& s) {
  std::string out = "theta_" + std::to_string(s.i) + ",theta_" + std::to_string(s.j) + ",mse\n";
  for (std::size_t a = 0; a < s.axis_i.size(); ++a)
    for (std::size_t b = 0; b < s.axis_j.size(); ++b)
      out += format_double(s.axis_i[a]) + "," + format_double(s.axis_j[b]) + "," +
             format_double(s.at(a, b)) + "\n";
  return out;
}

struct ProbeGrids {
  int side = 0;
  std::vector<Point> points;                 ///< t-major
  std::vector<std::vector<double>> inputs;   ///< i_j per qubit
  std::vector<std::vector<double>> outputs;  ///< o_j per qubit
};

/// Encoder outputs i_j and circuit outputs o_j on a uniform side x side grid.
inline ProbeGrids probe_intermediates(const ModelHandle& model, int side,
                                      const Domain& domain = {}) {
  const auto* h = std::get_if<HybridSpec>(&model.spec);
  if (!h) throw UnsupportedError("probe_intermediates: model has no quantum circuit");
  if (side < 2) throw ConfigError("probe_intermediates: grid side must be at least 2");
  ProbeGrids g;
  g.side = side;
  for (int a = 0; a < side; ++a)
    for (int b = 0; b < side; ++b)
      g.points.push_back({domain.t_end * a / (side - 1.0),
                          domain.x_lo + (domain.x_hi - domain.x_lo) * b / (side - 1.0)});
  const int nq = h->circuit.n_qubits;
  g.inputs.assign(nq, {});
  g.outputs.assign(nq, {});
  ModelBatch<1> batch(model.spec);
  batch.bind(model.params.values);
  const std::size_t chunk = static_cast<std::size_t>(batch.max_points());
  for (std::size_t lo = 0; lo < g.points.size(); lo += chunk) {
    const std::size_t n = std::min(chunk, g.points.size() - lo);
    batch.forward(std::span<const Point>(g.points).subspan(lo, n));
    const RowMat& enc = batch.encoder_outputs();
    const RowMat& out = batch.circuit_outputs();
    for (int q = 0; q < nq; ++q)
      for (std::size_t k = 0; k < n; ++k) {
        g.inputs[q].push_back(enc(q, static_cast<Eigen::Index>(k)));
        g.outputs[q].push_back(out(q, static_cast<Eigen::Index>(k)));
      }
  }
  return g;
}

inline std::string probe_csv(const ProbeGrids& g) {
  std::string s = "t,x";
  for (std::size_t q = 0; q < g.inputs.size(); ++q) s += ",i_" + std::to_string(q);
  for (std::size_t q = 0; q < g.outputs.size(); ++q) s += ",o_" + std::to_string(q);
  s += "\n";
  for (std::size_t k = 0; k < g.points.size(); ++k) {
    s += format_double(g.points[k].t) + "," + format_double(g.points[k].x);
    for (const auto& v : g.inputs) s += "," + format_double(v[k]);
    for (const auto& v : g.outputs) s += "," + format_double(v[k]);
    s += "\n";
  }
  return s;
}

// ===========================================================================
// Matrix config section

inline ExperimentMatrix matrix_from_json(const Json& j) {
  ExperimentMatrix m;
  if (j.contains("families")) {
    m.families.clear();
    for (const auto& f : j["families"]) {
      if (f.is_string()) {
        m.families.push_back(parse_family(f.get<std::string>()));
      } else {
        m.families.push_back(parse_family(f.at("family").get<std::string>(), f.value("c", 3.0)));
      }
    }
  }
  if (j.contains("c_list")) {  // scaling study: expands into XSinC families
    m.families.clear();
    for (double c : j["c_list"].get<std::vector<double>>())
      m.families.push_back(BoundaryFamily::xsinc(c));
  }
  m.Ls = j.value("L", m.Ls);
  m.Ns = j.value("N", m.Ns);
  m.params = j.value("params", m.params);
  m.points = j.value("points", m.points);
  m.seeds = j.value("seeds", m.seeds);
  if (j.contains("kinds")) {
    m.kinds.clear();
    for (const auto& k : j["kinds"]) m.kinds.push_back(parse_kind(k.get<std::string>()));
  }
  m.epochs_cpinn = j.value("epochs_cpinn", m.epochs_cpinn);
  m.epochs_qpinn = j.value("epochs_qpinn", m.epochs_qpinn);
  m.eval_every = j.value("eval_every", m.eval_every);
  m.cpinn_depths = j.value("cpinn_depths", m.cpinn_depths);
  m.qpinn_depth_c = j.value("qpinn_depth_c", m.qpinn_depth_c);
  m.encoding = parse_encoding(j.value("encoding", std::string("alternating")));
  m.adaptive_weights = j.value("adaptive_weights", m.adaptive_weights);
  m.resample = j.value("resample", m.resample);
  m.success_threshold = j.value("success_threshold", m.success_threshold);
  if (j.contains("reference")) m.solver = solver_config_from_json(j["reference"]);
  m.validate();
  return m;
}

}  // namespace qpinn
