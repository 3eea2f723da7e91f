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

// qpinn: command-line front end.
//
//   qpinn train      --config cfg.json --out runs/one
//   qpinn reference  --config cfg.json --cache refs
//   qpinn experiment --config cfg.json --out campaign [--jobs 4] [--resume]
//   qpinn ratios     --q q.csv --c c.csv --out ratios
//   qpinn success    --records campaign/representatives.csv [--threshold 1e-2]
//   qpinn landscape  --checkpoint m.ckpt.json --config cfg.json -i 0 -j 1
//   qpinn probe      --checkpoint m.ckpt.json [--side 51]

#include <qpinn/bench.hpp>
#include <qpinn/io.hpp>
#include <qpinn/refsolve.hpp>
#include <qpinn/trainer.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

namespace fs = std::filesystem;
using namespace qpinn;

namespace {

Json load_config(const fs::path& p) {
  if (p.empty()) return Json::object();
  try {
    return Json::parse(read_text(p));
  } catch (const Json::parse_error& e) {
    throw ConfigError("config " + p.string() + ": " + e.what());
  }
}

Json section(const Json& cfg, const char* name) {
  return cfg.contains(name) ? cfg.at(name) : Json::object();
}

ReferenceSolution reference_for(const PdeProblem& p, const SolverConfig& s,
                                const fs::path& cache_dir) {
  if (cache_dir.empty()) return solve(p, s);
  ReferenceCache cache(cache_dir);
  return cache.get(p, s);
}

void emit(const fs::path& out, const std::string& text) {
  if (out.empty()) {
    std::cout << text;
  } else {
    write_text(out, text);
    std::cerr << "wrote " << out.string() << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app("qpinn: classical and hybrid quantum PINN laboratory");
  app.require_subcommand(1);

  fs::path config, out, cache;

  auto* train_cmd = app.add_subcommand("train", "train a single model");
  train_cmd->add_option("--config", config, "JSON config (problem, model, training, reference)");
  train_cmd->add_option("--out", out, "output prefix for .csv / .json / .ckpt.json")->required();
  train_cmd->add_option("--cache", cache, "reference cache directory");
  bool quiet = false;
  train_cmd->add_flag("--quiet", quiet, "suppress progress output");

  auto* ref_cmd = app.add_subcommand("reference", "solve and cache a reference solution");
  ref_cmd->add_option("--config", config, "JSON config (problem, reference)");
  ref_cmd->add_option("--cache", cache, "reference cache directory")->required();

  auto* exp_cmd = app.add_subcommand("experiment", "run an experiment matrix");
  int jobs = 1;
  bool resume = false;
  exp_cmd->add_option("--config", config, "JSON config with a 'matrix' section")->required();
  exp_cmd->add_option("--out", out, "output directory")->required();
  exp_cmd->add_option("--jobs", jobs, "parallel training runs")->check(CLI::PositiveNumber);
  exp_cmd->add_flag("--resume", resume, "reuse finished runs found in the output directory");

  auto* ratio_cmd = app.add_subcommand("ratios", "epoch and MSE ratios of two curves");
  fs::path q_path, c_path;
  int per_decade = 8;
  ratio_cmd->add_option("--q", q_path, "qPINN curve or metrics CSV")->required();
  ratio_cmd->add_option("--c", c_path, "cPINN curve or metrics CSV")->required();
  ratio_cmd->add_option("--out", out, "output directory")->required();
  ratio_cmd->add_option("--per-decade", per_decade, "thresholds per decade");

  auto* succ_cmd = app.add_subcommand("success", "success ratios from a records table");
  fs::path records;
  double threshold = 1e-2;
  succ_cmd->add_option("--records", records, "runs.csv or representatives.csv")->required();
  succ_cmd->add_option("--threshold", threshold, "final-MSE success threshold");
  succ_cmd->add_option("--out", out, "output CSV (stdout if omitted)");

  auto* land_cmd = app.add_subcommand("landscape", "MSE over a two-parameter slice");
  fs::path ckpt;
  int pi = 0, pj = 1, resolution = 21;
  double half_width = 1.0;
  land_cmd->add_option("--checkpoint", ckpt, "checkpoint JSON")->required();
  land_cmd->add_option("--config", config, "JSON config (problem, reference)");
  land_cmd->add_option("--cache", cache, "reference cache directory");
  land_cmd->add_option("-i", pi, "first parameter index");
  land_cmd->add_option("-j", pj, "second parameter index");
  land_cmd->add_option("--half-width", half_width, "grid half-width");
  land_cmd->add_option("--resolution", resolution, "grid points per axis (odd)");
  land_cmd->add_option("--out", out, "output CSV (stdout if omitted)");

  auto* probe_cmd = app.add_subcommand("probe", "encoder and circuit outputs on a grid");
  int side = 51;
  probe_cmd->add_option("--checkpoint", ckpt, "hybrid checkpoint JSON")->required();
  probe_cmd->add_option("--side", side, "grid points per axis");
  probe_cmd->add_option("--out", out, "output CSV (stdout if omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train_cmd) {
      const Json cfg = load_config(config);
      const PdeProblem problem = problem_from_json(section(cfg, "problem"));
      const ModelConfig mc = model_config_from_json(section(cfg, "model"));
      const TrainConfig tc = train_config_from_json(section(cfg, "training"));
      const SolverConfig sc = solver_config_from_json(section(cfg, "reference"));
      const auto ref = reference_for(problem, sc, cache);
      ModelHandle model = make_model(mc.plan(), tc.seed, mc.params);
      std::cerr << "model: " << spec_to_json(model.spec).dump() << " (" << model.actual_params()
                << " parameters)\n";
      TrainObserver obs;
      if (!quiet)
        obs = [](const MetricsRow& r, const ModelHandle&) {
          if (r.mse)
            std::fprintf(stderr, "epoch %7d  L_train %.4e  L_val %.4e  mse %.4e\n", r.epoch,
                         r.train_total, r.val_total, *r.mse);
        };
      const std::string run_id = out.filename().string();
      try {
        TrainResult res = train(model, problem, tc, ref, obs);
        write_metrics(res.log, out.string() + ".csv");
        save_checkpoint(res.model, out.string() + ".ckpt.json");
        write_text(out.string() + ".json",
                   run_summary(run_id, problem, res.model, tc, res.log, res.wall_seconds).dump(2) +
                       "\n");
      } catch (const TrainingAborted& e) {
        write_metrics(e.log, out.string() + ".csv");
        save_checkpoint(e.last_good, out.string() + ".ckpt.json");
        Json s = run_summary(run_id, problem, e.last_good, tc, e.log, 0.0, "aborted");
        s["error"] = e.what();
        write_text(out.string() + ".json", s.dump(2) + "\n");
        std::cerr << "training aborted at epoch " << e.epoch << ": " << e.what() << "\n";
        return 3;
      }
    } else if (*ref_cmd) {
      const Json cfg = load_config(config);
      const PdeProblem problem = problem_from_json(section(cfg, "problem"));
      const SolverConfig sc = solver_config_from_json(section(cfg, "reference"));
      ReferenceCache rc(cache);
      rc.get(problem, sc);
      std::cout << rc.path_for(problem, sc).string() << "\n";
    } else if (*exp_cmd) {
      const Json cfg = load_config(config);
      const ExperimentMatrix m = matrix_from_json(section(cfg, "matrix"));
      MatrixOptions opt;
      opt.parallelism = jobs;
      opt.out_dir = out;
      opt.resume = resume;
      opt.progress = [](const RunRecord& r, std::size_t done, std::size_t total) {
        std::fprintf(stderr, "[%zu/%zu] %s final_mse=%.4e%s\n", done, total, r.run_id.c_str(),
                     r.final_mse.value_or(NAN), r.aborted ? " (aborted)" : "");
      };
      const auto res = run_matrix(m, opt);
      const auto reps = res.representative_records();
      write_text(out / "success.csv", success_csv(success_ratio(reps, m.success_threshold)));
      std::cerr << res.runs.size() << " runs, " << reps.size() << " representatives\n";
    } else if (*ratio_cmd) {
      auto load_curve = [](const fs::path& p) {
        const std::string text = read_text(p);
        if (text.rfind(kMetricsHeader, 0) == 0) return mse_curve(parse_metrics_csv(text));
        return parse_curve_csv(text);
      };
      const RatioCurves r = ratio_curves(load_curve(q_path), load_curve(c_path), per_decade);
      write_text(out / "epoch_ratio.csv", epoch_ratio_csv(r));
      write_text(out / "mse_ratio.csv", mse_ratio_csv(r));
      Json s = {{"accuracy_limit", r.accuracy_limit},
                {"threshold_range_empty", r.threshold_range_empty},
                {"thresholds_per_decade", per_decade}};
      write_text(out / "ratios.json", s.dump(2) + "\n");
    } else if (*succ_cmd) {
      const auto recs = parse_records_csv(read_text(records));
      emit(out, success_csv(success_ratio(recs, threshold)));
    } else if (*land_cmd) {
      const ModelHandle model = load_checkpoint(ckpt);
      const Json cfg = load_config(config);
      const PdeProblem problem = problem_from_json(section(cfg, "problem"));
      const SolverConfig sc = solver_config_from_json(section(cfg, "reference"));
      const MseGrid grid(reference_for(problem, sc, cache));
      emit(out, landscape_csv(landscape_slice(model, grid, pi, pj, half_width, resolution)));
    } else if (*probe_cmd) {
      emit(out, probe_csv(probe_intermediates(load_checkpoint(ckpt), side)));
    }
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const UnsupportedError& e) {
    std::cerr << "unsupported: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
