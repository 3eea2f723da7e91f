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

// Serialization: checkpoints (JSON), metrics logs (CSV), run summaries
// (JSON) and the experiment config file (JSON). Field names are part of the
// public interface and documented in README.md.

#include <qpinn/errors.hpp>
#include <qpinn/netlib.hpp>
#include <qpinn/pdeset.hpp>
#include <qpinn/refsolve.hpp>
#include <qpinn/trainer.hpp>

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace qpinn {

using Json = nlohmann::json;

inline constexpr int kCheckpointVersion = 1;

// --------------------------------------------------------------------------
// Text helpers

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& s, const char* what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ConfigError(std::string(what) + ": not a number: '" + s + "'");
  }
  if (used != s.size())
    throw ConfigError(std::string(what) + ": trailing characters in '" + s + "'");
  return v;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes through a temporary file so readers never observe partial output.
inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".partial";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + tmp);
    out << text;
    if (!out) throw ConfigError("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

// --------------------------------------------------------------------------
// Model specs and checkpoints

inline std::string encoding_name(EncodingSchedule e) {
  return e == EncodingSchedule::Alternating ? "alternating" : "both";
}

inline EncodingSchedule parse_encoding(const std::string& s) {
  if (s == "alternating") return EncodingSchedule::Alternating;
  if (s == "both") return EncodingSchedule::BothAxes;
  throw ConfigError("unknown encoding schedule '" + s + "'");
}

inline Json spec_to_json(const ModelSpec& spec) {
  if (const auto* d = std::get_if<DenseSpec>(&spec))
    return {{"kind", "dense"}, {"widths", d->widths}};
  const auto& h = std::get<HybridSpec>(spec);
  return {{"kind", "hybrid"},
          {"depth_c", h.depth_c},
          {"n_qubits", h.circuit.n_qubits},
          {"circuit_depth", h.circuit.depth},
          {"encoding", encoding_name(h.circuit.encoding)},
          {"encoder", h.encoder.widths},
          {"decoder", h.decoder.widths}};
}

inline ModelSpec spec_from_json(const Json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "dense") {
    DenseSpec d{j.at("widths").get<std::vector<int>>()};
    validate(d);
    return d;
  }
  if (kind == "hybrid") {
    HybridSpec h;
    h.depth_c = j.at("depth_c").get<int>();
    h.encoder.widths = j.at("encoder").get<std::vector<int>>();
    h.decoder.widths = j.at("decoder").get<std::vector<int>>();
    h.circuit.n_qubits = j.at("n_qubits").get<int>();
    h.circuit.depth = j.at("circuit_depth").get<int>();
    h.circuit.encoding = parse_encoding(j.value("encoding", "alternating"));
    validate(h);
    return h;
  }
  throw ConfigError("unknown model kind '" + kind + "'");
}

inline Json checkpoint_to_json(const ModelHandle& m) {
  return {{"format", "qpinn-checkpoint"},
          {"version", kCheckpointVersion},
          {"spec", spec_to_json(m.spec)},
          {"target_params", m.target_params},
          {"seed", m.seed},
          {"epoch", m.epoch},
          {"params", m.params.values}};
}

inline ModelHandle checkpoint_from_json(const Json& j) {
  if (j.value("format", "") != "qpinn-checkpoint")
    throw ConfigError("checkpoint: missing or wrong format tag");
  if (j.at("version").get<int>() != kCheckpointVersion)
    throw ConfigError("checkpoint: unsupported version");
  ModelHandle m;
  m.spec = spec_from_json(j.at("spec"));
  m.params.values = j.at("params").get<std::vector<double>>();
  m.target_params = j.value("target_params", 0);
  m.seed = j.value("seed", std::uint64_t{0});
  m.epoch = j.value("epoch", 0);
  if (static_cast<int>(m.params.size()) != m.actual_params())
    throw ConfigError("checkpoint: parameter count does not match the spec");
  if (m.target_params == 0) m.target_params = m.actual_params();
  return m;
}

inline void save_checkpoint(const ModelHandle& m, const std::filesystem::path& p) {
  write_text(p, checkpoint_to_json(m).dump(2) + "\n");
}

inline ModelHandle load_checkpoint(const std::filesystem::path& p) {
  try {
    return checkpoint_from_json(Json::parse(read_text(p)));
  } catch (const Json::exception& e) {
    throw ConfigError("checkpoint " + p.string() + ": " + e.what());
  }
}

// --------------------------------------------------------------------------
// Metrics CSV. Empty `mse` cells mean "not evaluated at this epoch".

inline constexpr const char* kMetricsHeader =
    "epoch,L_pde,L_t,L_x,L_bounds,L_train,L_val,w_bounds,w_pde,lr,mse,resampled";

inline std::string metrics_csv(const MetricsLog& log) {
  std::string out = kMetricsHeader;
  out += '\n';
  for (const auto& r : log.rows) {
    out += std::to_string(r.epoch);
    for (double v : {r.train.pde, r.train.t, r.train.x, r.train.bounds(),
                     r.train_total, r.val_total, r.w_bounds, r.w_pde, r.lr}) {
      out += ',';
      out += format_double(v);
    }
    out += ',';
    if (r.mse) out += format_double(*r.mse);
    out += r.resampled ? ",1\n" : ",0\n";
  }
  return out;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  cells.push_back(cur);
  return cells;
}

inline MetricsLog parse_metrics_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader)
    throw ConfigError("metrics csv: unexpected header");
  MetricsLog log;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto c = split_csv_line(line);
    if (c.size() != 12)
      throw ConfigError("metrics csv: line " + std::to_string(lineno) +
                        " has " + std::to_string(c.size()) + " fields");
    MetricsRow r;
    r.epoch = static_cast<int>(parse_double(c[0], "epoch"));
    r.train.pde = parse_double(c[1], "L_pde");
    r.train.t = parse_double(c[2], "L_t");
    r.train.x = parse_double(c[3], "L_x");
    r.train_total = parse_double(c[5], "L_train");
    r.val_total = parse_double(c[6], "L_val");
    r.w_bounds = parse_double(c[7], "w_bounds");
    r.w_pde = parse_double(c[8], "w_pde");
    r.lr = parse_double(c[9], "lr");
    if (!c[10].empty()) r.mse = parse_double(c[10], "mse");
    r.resampled = c[11] == "1";
    if (!log.rows.empty() && r.epoch <= log.rows.back().epoch)
      throw ConfigError("metrics csv: epochs not strictly increasing at line " +
                        std::to_string(lineno));
    log.rows.push_back(r);
  }
  return log;
}

inline void write_metrics(const MetricsLog& log, const std::filesystem::path& p) {
  write_text(p, metrics_csv(log));
}

inline MetricsLog read_metrics(const std::filesystem::path& p) {
  return parse_metrics_csv(read_text(p));
}

// --------------------------------------------------------------------------
// Config

inline Json problem_to_json(const PdeProblem& p) {
  Json j = {{"L", p.L}, {"N", p.N}, {"family", p.family.name()}};
  if (p.family.kind == BoundaryFamily::Kind::XSinC) j["c"] = p.family.c;
  j["domain"] = {{"T", p.domain.t_end}, {"x_lo", p.domain.x_lo}, {"x_hi", p.domain.x_hi}};
  return j;
}

inline PdeProblem problem_from_json(const Json& j) {
  PdeProblem p;
  p.L = j.value("L", p.L);
  p.N = j.value("N", p.N);
  p.family = parse_family(j.value("family", std::string("xsin")), j.value("c", 3.0));
  if (j.contains("domain")) {
    const auto& d = j["domain"];
    p.domain.t_end = d.value("T", p.domain.t_end);
    p.domain.x_lo = d.value("x_lo", p.domain.x_lo);
    p.domain.x_hi = d.value("x_hi", p.domain.x_hi);
  }
  p.validate();
  return p;
}

inline Json train_config_to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"batches", c.batches},
          {"eval_every", c.eval_every},
          {"points", c.points},
          {"seed", c.seed},
          {"lr_initial", c.lr.initial},
          {"lr_final", c.lr.final},
          {"lr_schedule", "exponential"},
          {"adaptive_weights", c.adaptive_weights},
          {"resample", c.resample},
          {"w_bounds", c.w_bounds},
          {"w_pde", c.w_pde}};
}

inline TrainConfig train_config_from_json(const Json& j) {
  TrainConfig c;
  c.epochs = j.value("epochs", c.epochs);
  c.batches = j.value("batches", c.batches);
  c.eval_every = j.value("eval_every", c.eval_every);
  c.points = j.value("points", c.points);
  c.seed = j.value("seed", c.seed);
  c.lr.initial = j.value("lr_initial", c.lr.initial);
  c.lr.final = j.value("lr_final", c.lr.final);
  c.adaptive_weights = j.value("adaptive_weights", c.adaptive_weights);
  c.resample = j.value("resample", c.resample);
  c.w_bounds = j.value("w_bounds", c.w_bounds);
  c.w_pde = j.value("w_pde", c.w_pde);
  c.validate();
  return c;
}

inline Json solver_config_to_json(const SolverConfig& c) {
  return {{"nx", c.nx}, {"dt", c.dt}, {"save_every", c.save_every}};
}

inline SolverConfig solver_config_from_json(const Json& j) {
  SolverConfig c;
  c.nx = j.value("nx", c.nx);
  c.dt = j.value("dt", c.dt);
  c.save_every = j.value("save_every", c.save_every);
  return c;
}

/// Model section: {"kind": "cpinn"|"qpinn", "params": 250, "depth": 2,
/// "depth_c": 1, "encoding": "alternating"}.
struct ModelConfig {
  std::string kind = "qpinn";
  int params = 250;
  int depth = 2;    ///< cPINN hidden layers
  int depth_c = 1;  ///< qPINN classical depth
  EncodingSchedule encoding = EncodingSchedule::Alternating;

  ModelSpec plan() const {
    if (kind == "cpinn") return plan_cpinn(params, depth);
    if (kind == "qpinn") return plan_qpinn(params, depth_c, encoding);
    throw ConfigError("model kind must be 'cpinn' or 'qpinn', got '" + kind + "'");
  }
};

inline ModelConfig model_config_from_json(const Json& j) {
  ModelConfig m;
  m.kind = j.value("kind", m.kind);
  m.params = j.value("params", m.params);
  m.depth = j.value("depth", m.depth);
  m.depth_c = j.value("depth_c", m.depth_c);
  m.encoding = parse_encoding(j.value("encoding", std::string("alternating")));
  (void)m.plan();  // surfaces configuration errors early
  return m;
}

inline Json model_config_to_json(const ModelConfig& m) {
  return {{"kind", m.kind},
          {"params", m.params},
          {"depth", m.depth},
          {"depth_c", m.depth_c},
          {"encoding", encoding_name(m.encoding)}};
}

/// JSON run summary written next to every metrics CSV.
inline Json run_summary(const std::string& run_id, const PdeProblem& problem,
                        const ModelHandle& model, const TrainConfig& cfg,
                        const MetricsLog& log, double wall_seconds,
                        const std::string& status = "ok") {
  Json j = {{"run_id", run_id},
            {"status", status},
            {"problem", problem_to_json(problem)},
            {"model", spec_to_json(model.spec)},
            {"actual_params", model.actual_params()},
            {"target_params", model.target_params},
            {"training", train_config_to_json(cfg)},
            {"resample_count", log.resample_count()},
            {"epochs_completed", log.rows.empty() ? 0 : log.rows.back().epoch},
            {"wall_seconds", wall_seconds}};
  const auto f = log.final_mse();
  j["final_mse"] = f ? Json(*f) : Json(nullptr);
  return j;
}

}  // namespace qpinn
