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
 * @file refsolve.hpp
 * @brief Finite-difference reference solutions for u_t = L u_xx - N u u_x + F.
 *
 * Crank-Nicolson for diffusion, second-order Adams-Bashforth for the
 * advection term (central differences in space, forward Euler on the first
 * step), forcing sampled at the step midpoint. Dirichlet boundaries are held
 * at their initial values.
 */

#include <qpinn/errors.hpp>
#include <qpinn/netlib.hpp>
#include <qpinn/pdeset.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <random>
#include <atomic>
#include <sstream>
#include <string>
#include <vector>

namespace qpinn {

struct SolverConfig {
  int nx = 513;          ///< spatial nodes on [x_lo, x_hi], odd
  double dt = 1e-4;
  int save_every = 10;   ///< steps between saved rows

  bool operator==(const SolverConfig&) const = default;
};

struct ReferenceSolution {
  std::vector<double> times;
  std::vector<double> xs;
  std::vector<double> u;  ///< row-major, times.size() x xs.size()
  std::string descriptor;

  std::size_t nt() const { return times.size(); }
  std::size_t nx() const { return xs.size(); }
  double at(std::size_t i, std::size_t j) const { return u[i * xs.size() + j]; }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(u).subspan(i * xs.size(), xs.size());
  }
};

/// Initial/boundary/forcing data for the generic solver.
struct InitialBoundaryData {
  std::function<double(double)> initial;  ///< u(0, x)
  std::function<double(double)> forcing;  ///< F(t)
  double left = 0.0;
  double right = 0.0;
};

inline std::string describe(const PdeProblem& p, const SolverConfig& c) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "{\"L\":%.17g,\"N\":%.17g,\"family\":\"%s\",\"c\":%.17g,"
                "\"T\":%.17g,\"x_lo\":%.17g,\"x_hi\":%.17g,\"nx\":%d,"
                "\"dt\":%.17g,\"save_every\":%d}",
                p.L, p.N, p.family.name().c_str(), p.family.c, p.domain.t_end,
                p.domain.x_lo, p.domain.x_hi, c.nx, c.dt, c.save_every);
  return buf;
}

/// FNV-1a, 64 bit.
inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline ReferenceSolution solve(double L, double N, const InitialBoundaryData& data,
                               const Domain& domain, const SolverConfig& cfg) {
  if (!(L > 0.0)) throw ConfigError("solve: L must be positive");
  if (cfg.nx < 5 || cfg.nx % 2 == 0)
    throw ConfigError("solve: nx must be odd and at least 5");
  if (!(cfg.dt > 0.0) || cfg.save_every < 1)
    throw ConfigError("solve: dt and save cadence must be positive");
  domain.validate();
  const long steps = std::lround(domain.t_end / cfg.dt);
  if (std::abs(steps * cfg.dt - domain.t_end) > 1e-9 * domain.t_end)
    throw ConfigError("solve: dt must divide T");
  if (steps % cfg.save_every != 0)
    throw ConfigError("solve: save cadence must divide the step count");

  const int nx = cfg.nx;
  const int m = nx - 2;
  const double dx = (domain.x_hi - domain.x_lo) / (nx - 1);
  const double dt = cfg.dt;
  const double r = L * dt / (dx * dx);

  ReferenceSolution sol;
  sol.xs.resize(nx);
  for (int j = 0; j < nx; ++j) sol.xs[j] = domain.x_lo + j * dx;
  sol.xs.back() = domain.x_hi;

  std::vector<double> u(nx);
  for (int j = 0; j < nx; ++j) u[j] = data.initial(sol.xs[j]);
  u.front() = data.left;
  u.back() = data.right;

  // Thomas factors for the constant tridiagonal (-r/2, 1 + r, -r/2).
  const double off = -0.5 * r, diag = 1.0 + r;
  std::vector<double> cp(m), denom(m);
  cp[0] = off / diag;
  denom[0] = diag;
  for (int i = 1; i < m; ++i) {
    denom[i] = diag - off * cp[i - 1];
    cp[i] = off / denom[i];
  }

  std::vector<double> adv(nx, 0.0), adv_prev(nx, 0.0), rhs(m), next(nx);
  auto advection = [&](const std::vector<double>& v, std::vector<double>& out) {
    for (int j = 1; j <= m; ++j)
      out[j] = -N * v[j] * (v[j + 1] - v[j - 1]) / (2.0 * dx);
  };

  auto save = [&](double t) {
    sol.times.push_back(t);
    sol.u.insert(sol.u.end(), u.begin(), u.end());
  };
  save(0.0);

  for (long n = 0; n < steps; ++n) {
    const double t = n * dt;
    double umax = 0.0;
    for (double v : u) umax = std::max(umax, std::abs(v));
    if (!std::isfinite(umax))
      throw NumericalError("solve: non-finite state at t = " + std::to_string(t));
    if (N != 0.0 && dt * umax * std::abs(N) > dx)
      throw NumericalError("solve: advective limit dt <= dx / max|u| violated at t = " +
                           std::to_string(t) + "; shrink dt");
    advection(u, adv);
    const double f = data.forcing(t + 0.5 * dt);
    for (int i = 0; i < m; ++i) {
      const int j = i + 1;
      const double explicit_adv =
          n == 0 ? adv[j] : 1.5 * adv[j] - 0.5 * adv_prev[j];
      rhs[i] = u[j] + 0.5 * r * (u[j - 1] - 2.0 * u[j] + u[j + 1]) +
               dt * (explicit_adv + f);
    }
    rhs[0] += 0.5 * r * data.left;
    rhs[m - 1] += 0.5 * r * data.right;
    // Forward elimination and back substitution.
    rhs[0] /= denom[0];
    for (int i = 1; i < m; ++i) rhs[i] = (rhs[i] - off * rhs[i - 1]) / denom[i];
    for (int i = m - 2; i >= 0; --i) rhs[i] -= cp[i] * rhs[i + 1];
    next.front() = data.left;
    next.back() = data.right;
    for (int i = 0; i < m; ++i) next[i + 1] = rhs[i];
    std::swap(adv, adv_prev);
    std::swap(u, next);
    if ((n + 1) % cfg.save_every == 0) save((n + 1) * dt);
  }
  sol.times.back() = domain.t_end;
  return sol;
}

inline ReferenceSolution solve(const PdeProblem& problem, const SolverConfig& cfg) {
  problem.validate();
  const BoundaryFamily fam = problem.family;
  InitialBoundaryData data{
      [fam](double x) { return initial_condition(fam, x); },
      [fam](double t) { return forcing(fam, t); },
      boundary_value(fam, problem.domain.x_lo),
      boundary_value(fam, problem.domain.x_hi)};
  ReferenceSolution sol = solve(problem.L, problem.N, data, problem.domain, cfg);
  sol.descriptor = describe(problem, cfg);
  return sol;
}

/// Bilinear interpolation on the saved grid.
inline double sample(const ReferenceSolution& sol, double t, double x) {
  const double eps = 1e-12;
  const double t0 = sol.times.front(), t1 = sol.times.back();
  const double x0 = sol.xs.front(), x1 = sol.xs.back();
  if (t < t0 - eps || t > t1 + eps || x < x0 - eps || x > x1 + eps)
    throw StructuralError("sample: point outside the solution domain");
  t = std::clamp(t, t0, t1);
  x = std::clamp(x, x0, x1);
  auto locate = [](const std::vector<double>& g, double v, std::size_t& i,
                   double& w) {
    const double h = (g.back() - g.front()) / static_cast<double>(g.size() - 1);
    double s = (v - g.front()) / h;
    i = std::min(static_cast<std::size_t>(std::max(0.0, std::floor(s))),
                 g.size() - 2);
    w = std::clamp(s - static_cast<double>(i), 0.0, 1.0);
  };
  std::size_t i, j;
  double wt, wx;
  locate(sol.times, t, i, wt);
  locate(sol.xs, x, j, wx);
  const double a = sol.at(i, j), b = sol.at(i, j + 1);
  const double c = sol.at(i + 1, j), d = sol.at(i + 1, j + 1);
  return (1.0 - wt) * ((1.0 - wx) * a + wx * b) + wt * ((1.0 - wx) * c + wx * d);
}

/// Reference values on a fixed uniform 101 x 101 evaluation grid spanning
/// the solution's domain ([0,1]^2 for the default problems).
class MseGrid {
 public:
  static constexpr int kSide = 101;

  explicit MseGrid(const ReferenceSolution& sol) {
    points_.reserve(kSide * kSide);
    target_.reserve(kSide * kSide);
    const double t0 = sol.times.front(), t1 = sol.times.back();
    const double x0 = sol.xs.front(), x1 = sol.xs.back();
    for (int i = 0; i < kSide; ++i) {
      const double t = i == kSide - 1 ? t1 : t0 + (t1 - t0) * i / (kSide - 1.0);
      for (int j = 0; j < kSide; ++j) {
        const double x = j == kSide - 1 ? x1 : x0 + (x1 - x0) * j / (kSide - 1.0);
        points_.push_back({t, x});
        target_.push_back(sample(sol, t, x));
      }
    }
  }

  std::span<const Point> points() const { return points_; }
  std::span<const double> targets() const { return target_; }

  double mse(const std::function<double(double, double)>& f) const {
    double acc = 0.0;
    for (std::size_t k = 0; k < points_.size(); ++k) {
      const double d = f(points_[k].t, points_[k].x) - target_[k];
      acc += d * d;
    }
    return acc / static_cast<double>(points_.size());
  }

  double mse(ModelKernel<double>& kernel) const {
    return mse([&](double t, double x) { return kernel.forward(t, x); });
  }

  double mse(ModelBatch<1>& batch) const {
    const std::size_t chunk = static_cast<std::size_t>(batch.max_points());
    double acc = 0.0;
    for (std::size_t lo = 0; lo < points_.size(); lo += chunk) {
      const std::size_t n = std::min(chunk, points_.size() - lo);
      const auto u = batch.forward(std::span<const Point>(points_).subspan(lo, n));
      for (std::size_t k = 0; k < n; ++k) {
        const double d = u[k] - target_[lo + k];
        acc += d * d;
      }
    }
    return acc / static_cast<double>(points_.size());
  }

 private:
  std::vector<Point> points_;
  std::vector<double> target_;
};

inline double mse(const ModelHandle& model, const MseGrid& grid) {
  ModelBatch<1> b(model.spec);
  b.bind(model.params.values);
  return grid.mse(b);
}

inline double mse(const ModelHandle& model, const ReferenceSolution& sol) {
  return mse(model, MseGrid(sol));
}

// ---------------------------------------------------------------------------
// Cache file, version 1 (host byte order, IEEE-754 doubles):
//   char[8]  magic "QPINNREF"
//   u32      version
//   u64      FNV-1a hash of the descriptor
//   u32      descriptor length, then descriptor bytes (JSON text)
//   u64 nt, u64 nx
//   f64[nt]  times, f64[nx] xs, f64[nt*nx] u (row-major)

inline constexpr char kRefMagic[8] = {'Q', 'P', 'I', 'N', 'N', 'R', 'E', 'F'};
inline constexpr std::uint32_t kRefVersion = 1;

inline void write_reference(const ReferenceSolution& sol,
                            const std::filesystem::path& path) {
  static std::atomic<unsigned> counter{0};
  const auto tmp = path.string() + ".tmp" + std::to_string(std::random_device{}()) +
                   "_" + std::to_string(counter++);
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("reference cache: cannot write " + tmp);
    auto put = [&](const void* p, std::size_t n) {
      out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    };
    const std::uint64_t hash = fnv1a(sol.descriptor);
    const std::uint32_t dlen = static_cast<std::uint32_t>(sol.descriptor.size());
    const std::uint64_t nt = sol.nt(), nx = sol.nx();
    put(kRefMagic, 8);
    put(&kRefVersion, 4);
    put(&hash, 8);
    put(&dlen, 4);
    put(sol.descriptor.data(), dlen);
    put(&nt, 8);
    put(&nx, 8);
    put(sol.times.data(), nt * 8);
    put(sol.xs.data(), nx * 8);
    put(sol.u.data(), nt * nx * 8);
  }
  std::filesystem::rename(tmp, path);
}

inline ReferenceSolution read_reference(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("reference cache: cannot open " + path.string());
  auto get = [&](void* p, std::size_t n) {
    in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (!in) throw std::runtime_error("reference cache: truncated " + path.string());
  };
  char magic[8];
  std::uint32_t version, dlen;
  std::uint64_t hash, nt, nx;
  get(magic, 8);
  if (!std::equal(magic, magic + 8, kRefMagic))
    throw std::runtime_error("reference cache: bad magic in " + path.string());
  get(&version, 4);
  if (version != kRefVersion)
    throw std::runtime_error("reference cache: unsupported version " +
                             std::to_string(version));
  get(&hash, 8);
  get(&dlen, 4);
  ReferenceSolution sol;
  sol.descriptor.resize(dlen);
  get(sol.descriptor.data(), dlen);
  if (fnv1a(sol.descriptor) != hash)
    throw std::runtime_error("reference cache: descriptor hash mismatch");
  get(&nt, 8);
  get(&nx, 8);
  sol.times.resize(nt);
  sol.xs.resize(nx);
  sol.u.resize(nt * nx);
  get(sol.times.data(), nt * 8);
  get(sol.xs.data(), nx * 8);
  get(sol.u.data(), nt * nx * 8);
  return sol;
}

/**
 * Directory of solved references keyed by descriptor hash. Writers go
 * through a temporary file and an atomic rename, so readers only ever see
 * complete files; writers for the same key in this process are serialised.
 */
class ReferenceCache {
 public:
  explicit ReferenceCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

  std::filesystem::path path_for(const PdeProblem& p, const SolverConfig& c) const {
    char name[64];
    std::snprintf(name, sizeof name, "ref_%016llx.bin",
                  static_cast<unsigned long long>(fnv1a(describe(p, c))));
    return dir_ / name;
  }

  ReferenceSolution get(const PdeProblem& p, const SolverConfig& c) {
    const auto path = path_for(p, c);
    const std::string want = describe(p, c);
    if (std::filesystem::exists(path)) {
      ReferenceSolution s = read_reference(path);
      if (s.descriptor == want) return s;
    }
    static std::mutex write_mutex;
    std::lock_guard lock(write_mutex);
    if (std::filesystem::exists(path)) {
      ReferenceSolution s = read_reference(path);
      if (s.descriptor == want) return s;
    }
    ReferenceSolution s = solve(p, c);
    std::filesystem::create_directories(dir_);
    write_reference(s, path);
    return s;
  }

 private:
  std::filesystem::path dir_;
};

}  // namespace qpinn
