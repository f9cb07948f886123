#pragma once

// Derivative-free box search: coarse grid (or seeded random cloud when the
// tensor grid is too large), then Nelder-Mead refinement from the best points.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "discordnet/linalg.hpp"
#include "discordnet/records.hpp"

namespace discordnet {

using Objective = std::function<double(const std::vector<double>&)>;

/// Order-preserving parallel map over [0, count). Falls back to a plain loop for threads <= 1.
template <class F>
auto parallel_map(std::size_t count, F&& f, unsigned threads) -> std::vector<decltype(f(std::size_t{}))> {
  using R = decltype(f(std::size_t{}));
  std::vector<R> out(count);
  if (threads <= 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) out[i] = f(i);
    return out;
  }
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < count; i += workers) out[i] = f(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

struct SearchSpec {
  std::size_t dimension = 0;
  std::vector<double> lower;
  std::vector<double> upper;
  std::size_t grid_points = 25;       // per (reduced) coordinate
  std::size_t max_grid = 400000;      // tensor grids larger than this become random clouds
  std::size_t random_samples = 4000;  // cloud size when the tensor grid is too large
  std::size_t multistarts = 5;
  double tolerance = 1e-7;  // simplex diameter
  std::size_t max_evaluations = 4000;  // per Nelder-Mead run
  bool maximize = false;
  bool clamp = true;  // project simplex vertices into the box
  /// Coordinates forced equal; each group becomes one search coordinate.
  std::vector<std::vector<std::size_t>> tie_groups;
  std::vector<std::vector<double>> extra_starts;  // full-dimension warm starts
  std::uint64_t seed = 20240601;
  unsigned threads = 1;

  void validate() const {
    if (dimension == 0) throw ConfigError("SearchSpec: dimension must be positive");
    if (lower.size() != dimension || upper.size() != dimension) throw ConfigError("SearchSpec: bounds size mismatch");
    for (std::size_t i = 0; i < dimension; ++i)
      if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]) || lower[i] > upper[i]) {
        throw ConfigError("SearchSpec: bounds must be finite and ordered");
      }
    if (grid_points < 2) throw ConfigError("SearchSpec: grid resolution must be >= 2");
  }
};

struct SearchResult {
  std::vector<double> argopt;
  double value = 0.0;
  std::size_t evaluations = 0;
  bool converged = false;
};

namespace detail {

// Maps reduced search coordinates onto the full vector.
struct CoordinateMap {
  std::vector<std::vector<std::size_t>> groups;

  CoordinateMap(std::size_t dim, const std::vector<std::vector<std::size_t>>& ties) {
    std::vector<bool> used(dim, false);
    for (const auto& g : ties) {
      if (g.empty()) continue;
      for (auto i : g) {
        if (i >= dim || used[i]) throw ConfigError("SearchSpec: invalid tie group");
        used[i] = true;
      }
      groups.push_back(g);
    }
    for (std::size_t i = 0; i < dim; ++i)
      if (!used[i]) groups.push_back({i});
    std::sort(groups.begin(), groups.end(), [](const auto& a, const auto& b) { return a.front() < b.front(); });
  }
  std::size_t reduced() const { return groups.size(); }
  std::vector<double> expand(const std::vector<double>& r, std::size_t dim) const {
    std::vector<double> x(dim);
    for (std::size_t g = 0; g < groups.size(); ++g)
      for (auto i : groups[g]) x[i] = r[g];
    return x;
  }
  std::vector<double> reduce(const std::vector<double>& x) const {
    std::vector<double> r(groups.size());
    for (std::size_t g = 0; g < groups.size(); ++g) r[g] = x[groups[g].front()];
    return r;
  }
};

struct NelderMeadOutcome {
  std::vector<double> x;
  double f;
  std::size_t evaluations;
  bool converged;
};

// Minimizes f from `start` with per-coordinate initial steps.
inline NelderMeadOutcome nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                     std::vector<double> start, const std::vector<double>& step,
                                     const std::vector<double>& lo, const std::vector<double>& hi, bool clamp,
                                     double tolerance, std::size_t max_evals) {
  const std::size_t n = start.size();
  auto project = [&](std::vector<double>& x) {
    if (!clamp) return;
    for (std::size_t i = 0; i < n; ++i) x[i] = std::clamp(x[i], lo[i], hi[i]);
  };
  std::size_t evals = 0;
  auto eval = [&](std::vector<double>& x) {
    project(x);
    ++evals;
    const double v = f(x);
    if (!std::isfinite(v)) throw NumericalError("optimize: objective returned a non-finite value");
    return v;
  };

  std::vector<std::vector<double>> simplex(n + 1, start);
  std::vector<double> fv(n + 1);
  for (std::size_t i = 0; i < n; ++i) {
    double s = step[i];
    if (clamp && start[i] + s > hi[i]) s = -s;  // step inward at the upper face
    simplex[i + 1][i] += s;
  }
  for (std::size_t i = 0; i <= n; ++i) fv[i] = eval(simplex[i]);

  std::vector<std::size_t> order(n + 1);
  bool converged = false;
  while (evals < max_evals) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    const auto& best = simplex[order.front()];
    double diameter = 0;
    for (std::size_t k = 1; k <= n; ++k) {
      double d = 0;
      for (std::size_t i = 0; i < n; ++i) d = std::max(d, std::abs(simplex[order[k]][i] - best[i]));
      diameter = std::max(diameter, d);
    }
    if (diameter < tolerance) {
      converged = true;
      break;
    }
    const std::size_t worst = order.back();
    const std::size_t second = order[n - 1];
    std::vector<double> centroid(n, 0.0);
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t i = 0; i < n; ++i) centroid[i] += simplex[order[k]][i] / static_cast<double>(n);

    auto along = [&](double t) {
      std::vector<double> x(n);
      for (std::size_t i = 0; i < n; ++i) x[i] = centroid[i] + t * (simplex[worst][i] - centroid[i]);
      return x;
    };
    auto xr = along(-1.0);
    const double fr = eval(xr);
    if (fr < fv[order.front()]) {
      auto xe = along(-2.0);
      const double fe = eval(xe);
      if (fe < fr) {
        simplex[worst] = xe, fv[worst] = fe;
      } else {
        simplex[worst] = xr, fv[worst] = fr;
      }
      continue;
    }
    if (fr < fv[second]) {
      simplex[worst] = xr, fv[worst] = fr;
      continue;
    }
    const bool outside = fr < fv[worst];
    auto xc = along(outside ? -0.5 : 0.5);
    const double fc = eval(xc);
    if (fc < (outside ? fr : fv[worst])) {
      simplex[worst] = xc, fv[worst] = fc;
      continue;
    }
    const auto anchor = simplex[order.front()];
    for (std::size_t k = 1; k <= n; ++k) {
      auto& v = simplex[order[k]];
      for (std::size_t i = 0; i < n; ++i) v[i] = anchor[i] + 0.5 * (v[i] - anchor[i]);
      fv[order[k]] = eval(v);
    }
  }
  const auto it = std::min_element(fv.begin(), fv.end());
  const auto idx = static_cast<std::size_t>(it - fv.begin());
  return {simplex[idx], *it, evals, converged};
}

}  // namespace detail

/// Grid (or random cloud) followed by multistart Nelder-Mead. Deterministic for a given spec.
inline SearchResult optimize(const Objective& objective, const SearchSpec& spec) {
  spec.validate();
  const detail::CoordinateMap cmap(spec.dimension, spec.tie_groups);
  const std::size_t rd = cmap.reduced();
  std::vector<double> rlo(rd), rhi(rd);
  for (std::size_t g = 0; g < rd; ++g) {
    rlo[g] = spec.lower[cmap.groups[g].front()];
    rhi[g] = spec.upper[cmap.groups[g].front()];
  }
  const double sign = spec.maximize ? -1.0 : 1.0;
  auto reduced_objective = [&](const std::vector<double>& r) { return sign * objective(cmap.expand(r, spec.dimension)); };

  // Candidate points are generated on demand: index k < grid_total addresses the
  // tensor grid (or the seeded random cloud), the rest are warm starts.
  double grid_size = 1;
  for (std::size_t g = 0; g < rd; ++g) grid_size *= static_cast<double>(spec.grid_points);
  const bool tensor_grid = grid_size <= static_cast<double>(spec.max_grid);
  const std::size_t grid_total = tensor_grid ? static_cast<std::size_t>(grid_size) : spec.random_samples;
  std::vector<std::vector<double>> random_cloud;
  if (!tensor_grid) {
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    random_cloud.reserve(spec.random_samples);
    for (std::size_t k = 0; k < spec.random_samples; ++k) {
      std::vector<double> r(rd);
      for (std::size_t g = 0; g < rd; ++g) r[g] = rlo[g] + (rhi[g] - rlo[g]) * u(rng);
      random_cloud.push_back(std::move(r));
    }
  }
  std::vector<std::vector<double>> warm;
  for (const auto& s : spec.extra_starts) {
    if (s.size() != spec.dimension) throw ConfigError("SearchSpec: warm start has wrong dimension");
    warm.push_back(cmap.reduce(s));
  }
  auto point = [&](std::size_t k, std::vector<double>& r) {
    if (k >= grid_total) {
      r = warm[k - grid_total];
    } else if (!tensor_grid) {
      r = random_cloud[k];
    } else {
      r.resize(rd);
      std::size_t rem = k;
      for (std::size_t g = rd; g-- > 0;) {
        const std::size_t i = rem % spec.grid_points;
        rem /= spec.grid_points;
        r[g] = rlo[g] + (rhi[g] - rlo[g]) * static_cast<double>(i) / static_cast<double>(spec.grid_points - 1);
      }
    }
  };

  // Each worker scans a strided share of the grid and keeps its best `multistarts` points.
  const std::size_t keep = std::max<std::size_t>(spec.multistarts, 1);
  using Scored = std::pair<double, std::size_t>;
  const unsigned workers = std::max(1u, spec.threads);
  auto partial = parallel_map(workers, [&](std::size_t w) {
    std::vector<Scored> top;
    std::vector<double> r;
    for (std::size_t k = w; k < grid_total; k += workers) {
      point(k, r);
      const double v = reduced_objective(r);
      if (!std::isfinite(v)) throw NumericalError("optimize: objective returned a non-finite value");
      if (top.size() < keep || v < top.back().first) {
        top.insert(std::upper_bound(top.begin(), top.end(), Scored{v, k}), Scored{v, k});
        if (top.size() > keep) top.pop_back();
      }
    }
    return top;
  }, workers);
  std::vector<Scored> ranked;
  for (const auto& t : partial) ranked.insert(ranked.end(), t.begin(), t.end());
  std::sort(ranked.begin(), ranked.end());
  if (ranked.size() > keep) ranked.resize(keep);
  std::size_t evaluations = grid_total;

  std::vector<std::size_t> starts;
  for (std::size_t k = 0; k < warm.size(); ++k) starts.push_back(grid_total + k);
  for (const auto& [v, k] : ranked)
    if (starts.size() < spec.multistarts + warm.size()) starts.push_back(k);

  std::vector<double> step(rd);
  for (std::size_t g = 0; g < rd; ++g) {
    const double span = rhi[g] - rlo[g];
    step[g] = span > 0 ? span / static_cast<double>(spec.grid_points - 1) : 0.1;
  }

  auto runs = parallel_map(starts.size(), [&](std::size_t s) {
    std::vector<double> r;
    point(starts[s], r);
    return detail::nelder_mead(reduced_objective, r, step, rlo, rhi, spec.clamp, spec.tolerance,
                               spec.max_evaluations);
  }, spec.threads);

  SearchResult best;
  best.value = std::numeric_limits<double>::infinity();
  if (!ranked.empty()) {  // the raw grid optimum is a valid fallback
    std::vector<double> r;
    point(ranked.front().second, r);
    best.argopt = cmap.expand(r, spec.dimension);
    best.value = ranked.front().first;
  }
  bool any_converged = false;
  for (const auto& r : runs) {
    evaluations += r.evaluations;
    any_converged = any_converged || r.converged;
    if (r.f < best.value) {
      best.value = r.f;
      best.argopt = cmap.expand(r.x, spec.dimension);
    }
  }
  best.value *= sign;
  best.evaluations = evaluations;
  best.converged = any_converged;
  return best;
}

/// Mean of `objective` over a `samples`-point uniform grid of width `width`
/// centred on `center`, jointly over the coordinates in `perturbed` (tensor grid).
inline double uniform_average(const Objective& objective, const std::vector<double>& center, double width,
                              std::size_t samples, const std::vector<std::size_t>& perturbed, unsigned threads = 1) {
  if (width < 0) throw ConfigError("uniform_average: width must be non-negative");
  if (width == 0 || perturbed.empty() || samples == 0) return objective(center);
  for (auto i : perturbed)
    if (i >= center.size()) throw ConfigError("uniform_average: perturbed coordinate out of range");
  const auto offsets = linspace(-width / 2, width / 2, samples);
  std::size_t total = 1;
  for (std::size_t k = 0; k < perturbed.size(); ++k) total *= samples;
  auto vals = parallel_map(total, [&](std::size_t idx) {
    std::vector<double> x = center;
    std::size_t rem = idx;
    for (std::size_t k = perturbed.size(); k-- > 0;) {
      x[perturbed[k]] += offsets[rem % samples];
      rem /= samples;
    }
    return objective(x);
  }, threads);
  return std::accumulate(vals.begin(), vals.end(), 0.0) / static_cast<double>(total);
}

struct SweepSpec {
  std::string experiment;
  std::string parameter;
  std::vector<double> values;
  /// Produces the record for one swept value; must be pure.
  std::function<SweepRecord(double)> evaluate;
  unsigned threads = 1;

  void validate() const {
    if (values.empty()) throw ConfigError("SweepSpec: empty range");
    if (!evaluate) throw ConfigError("SweepSpec: no evaluator");
  }
};

inline std::vector<SweepRecord> run_sweep(const SweepSpec& spec) {
  spec.validate();
  return parallel_map(spec.values.size(), [&](std::size_t i) {
    const auto t0 = std::chrono::steady_clock::now();
    SweepRecord rec = spec.evaluate(spec.values[i]);
    rec.experiment = spec.experiment;
    if (rec.params.empty() || rec.params.front().first != spec.parameter) {
      rec.params.insert(rec.params.begin(), {spec.parameter, spec.values[i]});
    }
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
  }, spec.threads);
}

}  // namespace discordnet
