#pragma once

// Scripted studies built on outer searches over carrier measurement bases:
// bipartite optima, the N-party scaling table, the discord-structure census,
// theta heatmaps, robustness sweeps, the channel checks and the dephasing study.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "discordnet/correlations.hpp"
#include "discordnet/protocol.hpp"
#include "discordnet/records.hpp"
#include "discordnet/search.hpp"
#include "discordnet/states.hpp"

namespace discordnet::experiments {

inline constexpr double pi = std::numbers::pi;
/// theta of both carriers at the bipartite GQD optimum (phi arbitrary).
inline constexpr double gqd_optimal_theta = 0.9458;
/// Largest one-way discord the bipartite protocol produces.
inline constexpr double max_one_way_discord = 0.2018;

struct Options {
  InnerBudget inner = InnerBudget::fast();  // inside outer searches and sweeps
  InnerBudget final = InnerBudget::full();  // re-evaluation of reported optima
  unsigned threads = 1;
};

// ---- outer search over carrier bases ---------------------------------------

using BasisObjective = std::function<double(const std::vector<BlochAngles>&, const InnerBudget&)>;

struct OuterSpec {
  std::size_t carriers = 2;
  bool phases = false;     // also search phi; otherwise every phi is 0
  bool symmetric = true;   // first stage ties all carriers; otherwise a full tensor grid
  std::size_t grid = 13;   // per coordinate in the first stage
  std::size_t multistarts = 3;
  std::size_t stage_evaluations = 300;  // per Nelder-Mead run in the first stage
  std::size_t free_evaluations = 400;   // unrestricted refinement
  double tolerance = 1e-5;
  std::vector<std::vector<BlochAngles>> warm_starts;
};

struct OuterResult {
  std::vector<BlochAngles> basis;
  double value = 0.0;         // at the final inner budget
  double search_value = 0.0;  // at the search budget
  std::size_t evaluations = 0;
  bool converged = false;

  double theta_mean() const {
    double s = 0;
    for (const auto& b : basis) s += b.theta;
    return basis.empty() ? 0.0 : s / static_cast<double>(basis.size());
  }
  double theta_spread() const {
    if (basis.empty()) return 0.0;
    auto [lo, hi] = std::minmax_element(basis.begin(), basis.end(),
                                        [](const auto& a, const auto& b) { return a.theta < b.theta; });
    return hi->theta - lo->theta;
  }
};

/// Maximizes `objective` over the bases of `spec.carriers` carriers: a first
/// stage (tied or full grid plus Nelder-Mead), an unrestricted Nelder-Mead
/// refinement, then one evaluation at the final budget.
inline OuterResult maximize_bases(const BasisObjective& objective, const OuterSpec& spec, const Options& opt) {
  const std::size_t k = spec.carriers;
  if (k == 0) throw ConfigError("maximize_bases: no carriers to search");
  const std::size_t per = spec.phases ? 2 : 1;
  auto unpack = [&](const std::vector<double>& x) {
    std::vector<BlochAngles> b(k);
    for (std::size_t q = 0; q < k; ++q) b[q] = canonical_angles(x[per * q], spec.phases ? x[per * q + 1] : 0.0);
    return b;
  };
  auto pack = [&](const std::vector<BlochAngles>& b) {
    if (b.size() != k) throw ConfigError("maximize_bases: warm start has the wrong carrier count");
    std::vector<double> x;
    for (const auto& a : b) {
      x.push_back(a.theta);
      if (spec.phases) x.push_back(a.phi);
    }
    return x;
  };
  Objective f = [&](const std::vector<double>& x) { return objective(unpack(x), opt.inner); };

  SearchSpec s;
  s.dimension = per * k;
  for (std::size_t q = 0; q < k; ++q) {
    s.lower.push_back(0.0);
    s.upper.push_back(pi);
    if (spec.phases) {
      s.lower.push_back(0.0);
      s.upper.push_back(2 * pi);
    }
  }
  s.grid_points = spec.grid;
  s.multistarts = spec.multistarts;
  s.max_evaluations = spec.stage_evaluations;
  s.tolerance = spec.tolerance;
  s.maximize = true;
  s.clamp = false;  // angles are folded by canonical_angles
  s.threads = opt.threads;
  for (const auto& w : spec.warm_starts) s.extra_starts.push_back(pack(w));
  if (spec.symmetric && k > 1) {
    std::vector<std::size_t> thetas, phis;
    for (std::size_t q = 0; q < k; ++q) {
      thetas.push_back(per * q);
      if (spec.phases) phis.push_back(per * q + 1);
    }
    s.tie_groups = {thetas};
    if (spec.phases) s.tie_groups.push_back(phis);
  }
  SearchResult best = optimize(f, s);
  std::size_t evaluations = best.evaluations;
  bool converged = best.converged;

  if (k > 1 && spec.free_evaluations > 0) {
    SearchSpec free = s;
    free.tie_groups.clear();
    free.max_grid = 0;
    free.random_samples = 0;
    free.multistarts = 0;
    free.extra_starts = {best.argopt};
    free.max_evaluations = spec.free_evaluations;
    const auto r = optimize(f, free);
    evaluations += r.evaluations;
    converged = converged || r.converged;
    if (r.value > best.value) best = r;
  }

  OuterResult out;
  out.basis = unpack(best.argopt);
  out.search_value = best.value;
  out.value = objective(out.basis, opt.final);
  out.evaluations = evaluations + 1;
  out.converged = converged;
  return out;
}

inline double protocol_gqd(const ProtocolConfig& cfg, const InnerBudget& budget) {
  return gqd_min(run_circuit(cfg).final_state, budget).value;
}

inline ProtocolConfig with_basis(ProtocolConfig cfg, const std::vector<BlochAngles>& basis) {
  cfg.carrier_basis = basis;
  return cfg;
}

inline void put_basis(SweepRecord& rec, const std::vector<BlochAngles>& basis, bool phases) {
  for (std::size_t q = 0; q < basis.size(); ++q) {
    rec.values.emplace_back("theta" + std::to_string(q + 1), basis[q].theta);
    if (phases) rec.values.emplace_back("phi" + std::to_string(q + 1), basis[q].phi);
  }
}

// ---- bipartite optima -------------------------------------------------------

/// Maximum of D_{M1|M2} and of the GQD over all four carrier angles.
inline SweepRecord bipartite_optimum(const Options& opt) {
  SweepRecord rec;
  rec.experiment = "bipartite_optimum";
  const ProtocolConfig base = standard_config(2, uniform_basis(2, pi / 2));

  OuterSpec ds;
  ds.phases = true;
  ds.symmetric = false;
  ds.grid = 7;
  auto d12 = maximize_bases(
      [&](const std::vector<BlochAngles>& b, const InnerBudget& ib) {
        return discord_asym(run_circuit(with_basis(base, b)).final_state, "M2", {"M1"}, ib).value;
      },
      ds, opt);
  const auto state_d = run_circuit(with_basis(base, d12.basis)).final_state;

  OuterSpec gs;
  gs.phases = true;
  gs.grid = 17;
  auto g = maximize_bases(
      [&](const std::vector<BlochAngles>& b, const InnerBudget& ib) { return protocol_gqd(with_basis(base, b), ib); }, gs,
      opt);

  rec.values = {{"D12_max", d12.value},
                {"D21_at_D12_max", discord_asym(state_d, "M1", {"M2"}, opt.final).value},
                {"D12_theta1", d12.basis[0].theta},
                {"D12_theta2", d12.basis[1].theta},
                {"GQD_max", g.value},
                {"GQD_theta1", g.basis[0].theta},
                {"GQD_theta2", g.basis[1].theta}};
  rec.evaluations = d12.evaluations + g.evaluations;
  rec.converged = d12.converged && g.converged;
  return rec;
}

/// max - min of the bipartite GQD over a 12-point set of carrier phases at fixed thetas.
inline double phase_spread(double theta1, double theta2, const Options& opt, std::size_t points = 12) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t k = 0; k < points; ++k) {
    const double phi1 = 2 * pi * static_cast<double>(k) / static_cast<double>(points);
    const double phi2 = 2 * pi * static_cast<double>((5 * k) % points) / static_cast<double>(points);
    const double g = protocol_gqd(standard_config(2, {{theta1, phi1}, {theta2, phi2}}), opt.final);
    lo = std::min(lo, g);
    hi = std::max(hi, g);
  }
  return hi - lo;
}

// ---- N-party scaling table ----------------------------------------------------

enum class Mixedness { purity, entropy };

/// epsilon in [0,1] with the same purity (or entropy) as `rho`, by bisection.
inline double matching_epsilon(const DensityMatrix& rho, Mixedness measure) {
  const std::size_t n = rho.qubits();
  auto level = [&](const DensityMatrix& s) { return measure == Mixedness::purity ? -purity(s) : entropy(s); };
  const double target = level(rho);
  double lo = 0.0, hi = 1.0;  // level() increases with epsilon
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    (level(states::werner_w(n, mid)) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

inline OuterSpec scaling_outer_spec(std::size_t n) {
  OuterSpec s;
  s.carriers = n;
  s.grid = 13;
  s.free_evaluations = 80 * n;
  return s;
}

/// One row: outer-maximized GQD of the memories, the W-state benchmark and the
/// W-Werner state at matched mixedness (purity, with the entropy variant alongside).
inline SweepRecord table1_row(std::size_t n, const Options& opt) {
  if (n < 2 || n > 6) throw ConfigError("table1: N must lie in [2, 6]");
  const ProtocolConfig base = standard_config(n, uniform_basis(n, pi / 2));
  auto best = maximize_bases(
      [&](const std::vector<BlochAngles>& b, const InnerBudget& ib) { return protocol_gqd(with_basis(base, b), ib); },
      scaling_outer_spec(n), opt);
  // theta -> pi - theta on every carrier swaps |+> and |-> in the carrier
  // basis; classical carriers are invariant, so report the branch below pi/2.
  if (best.theta_mean() > pi / 2)
    for (auto& b : best.basis) b.theta = pi - b.theta;
  const auto state = run_circuit(with_basis(base, best.basis)).final_state;
  const double g_w = gqd_min(states::w_state(n), opt.final).value;
  const double eps_p = matching_epsilon(state, Mixedness::purity);
  const double eps_s = matching_epsilon(state, Mixedness::entropy);
  const double g_eps = gqd_min(states::werner_w(n, eps_p), opt.final).value;
  const double g_eps_s = gqd_min(states::werner_w(n, eps_s), opt.final).value;

  SweepRecord rec;
  rec.experiment = "table1";
  rec.params = {{"n", static_cast<double>(n)}};
  rec.values = {{"G_M", best.value},
                {"theta", best.theta_mean()},
                {"theta_spread", best.theta_spread()},
                {"G_W", g_w},
                {"purity", purity(state)},
                {"entropy", entropy(state)},
                {"eps", eps_p},
                {"G_eps", g_eps},
                {"ratio", best.value / g_eps},
                {"eps_entropy", eps_s},
                {"G_eps_entropy", g_eps_s}};
  rec.evaluations = best.evaluations;
  rec.converged = best.converged;
  return rec;
}

inline std::vector<SweepRecord> table1(std::size_t n_max, const Options& opt, std::size_t n_min = 2) {
  if (n_min < 2 || n_max > 6 || n_min > n_max) throw ConfigError("table1: N range must lie in [2, 6]");
  std::vector<SweepRecord> rows;
  for (std::size_t n = n_min; n <= n_max; ++n) rows.push_back(table1_row(n, opt));
  return rows;
}

// ---- discord-structure census ---------------------------------------------------

struct Census {
  std::vector<SweepRecord> pairs;  // one row per (interaction count, compound)
  std::vector<SweepRecord> gqd;    // one row per interaction count
};

inline bool is_memory(const Label& l) { return !l.empty() && l.front() == 'M'; }

/// For k = 1..n interacting pairs: every two-party compound's one-way discords
/// at generic angles, classified zero / nonzero, and the maximum GQD of the
/// retained state. D_{X|Y} is expected nonzero exactly when Y is a memory.
inline Census table2_census(std::size_t n, const Options& opt, double theta = 0.9, double phi = 0.3,
                            double zero_threshold = 1e-6) {
  if (n != 3 && n != 4) throw ConfigError("table2: N must be 3 or 4");
  Census out;
  for (std::size_t k = 1; k <= n; ++k) {
    ProtocolConfig cfg;
    cfg.n = n;
    for (std::size_t i = 1; i <= k; ++i) cfg.interactions.push_back(i);
    cfg.carrier_basis = uniform_basis(k, theta, phi);
    const auto res = run_circuit(cfg);
    const auto& labels = res.retained_labels;
    for (std::size_t i = 0; i < labels.size(); ++i)
      for (std::size_t j = i + 1; j < labels.size(); ++j) {
        const Label& x = labels[i];
        const Label& y = labels[j];
        const auto pair = partial_trace(res.final_state, {x, y});
        const double dxy = discord_asym(pair, y, {x}, opt.final).value;
        const double dyx = discord_asym(pair, x, {y}, opt.final).value;
        SweepRecord rec;
        rec.experiment = "table2_pairs";
        rec.tags = {{"compound", x + y}};
        rec.params = {{"interactions", static_cast<double>(k)},
                      {"i", static_cast<double>(i + 1)},
                      {"j", static_cast<double>(j + 1)}};
        rec.values = {{"D_ij", dxy},
                      {"D_ji", dyx},
                      {"nonzero_ij", dxy > zero_threshold ? 1.0 : 0.0},
                      {"nonzero_ji", dyx > zero_threshold ? 1.0 : 0.0},
                      {"expected_ij", is_memory(y) ? 1.0 : 0.0},
                      {"expected_ji", is_memory(x) ? 1.0 : 0.0}};
        out.pairs.push_back(std::move(rec));
      }

    OuterSpec spec;
    spec.carriers = k;
    spec.free_evaluations = 80 * k;
    const auto best = maximize_bases(
        [&](const std::vector<BlochAngles>& b, const InnerBudget& ib) { return protocol_gqd(with_basis(cfg, b), ib); },
        spec, opt);
    SweepRecord g;
    g.experiment = "table2_gqd";
    g.params = {{"n", static_cast<double>(n)}, {"interactions", static_cast<double>(k)}};
    g.values = {{"max_gqd", best.value},
                {"theta", best.theta_mean()},
                {"theta_spread", best.theta_spread()},
                {"ratio_to_one_way", best.value / max_one_way_discord}};
    g.evaluations = best.evaluations;
    g.converged = best.converged;
    out.gqd.push_back(std::move(g));
  }
  return out;
}

// ---- theta heatmaps -------------------------------------------------------------------

struct Heatmaps {
  std::vector<SweepRecord> d12;  // D_{M1|M2}
  std::vector<SweepRecord> d21;  // D_{M2|M1}
  std::vector<SweepRecord> gqd;
};

/// The three correlation quantifiers of the bipartite output over a
/// resolution x resolution grid of (theta1, theta2) in [0, pi]^2, phi = 0.
inline Heatmaps heatmaps(std::size_t resolution, const Options& opt) {
  if (resolution < 2) throw ConfigError("heatmaps: resolution must be >= 2");
  const auto thetas = linspace(0.0, pi, resolution);
  struct Cell {
    double d12, d21, g;
  };
  auto cells = parallel_map(resolution * resolution, [&](std::size_t idx) {
    const double t1 = thetas[idx / resolution], t2 = thetas[idx % resolution];
    const auto rho = run_circuit(standard_config(2, {{t1, 0.0}, {t2, 0.0}})).final_state;
    return Cell{discord_asym(rho, "M2", {"M1"}, opt.inner).value, discord_asym(rho, "M1", {"M2"}, opt.inner).value,
                gqd_min(rho, opt.inner).value};
  }, opt.threads);
  Heatmaps h;
  for (std::size_t idx = 0; idx < cells.size(); ++idx) {
    const std::vector<std::pair<std::string, double>> params = {{"theta1", thetas[idx / resolution]},
                                                                {"theta2", thetas[idx % resolution]}};
    h.d12.push_back({"heatmap_d12", {}, params, {{"value", cells[idx].d12}}});
    h.d21.push_back({"heatmap_d21", {}, params, {{"value", cells[idx].d21}}});
    h.gqd.push_back({"heatmap_gqd", {}, params, {{"value", cells[idx].g}}});
  }
  return h;
}

// ---- robustness: measurement settings -------------------------------------------------

/// Mean GQD when both carrier thetas vary jointly over a `samples`-point grid
/// of width `width` around `center` (phi = 0), against the value at the center.
inline SweepRecord measurement_window(const Options& opt, double width = pi / 10, std::size_t samples = 21,
                                      double center = gqd_optimal_theta) {
  auto g = [&](const std::vector<double>& x) {
    return protocol_gqd(standard_config(2, {canonical_angles(x[0], 0.0), canonical_angles(x[1], 0.0)}), opt.inner);
  };
  const double peak = g({center, center});
  const double avg = uniform_average(g, {center, center}, width, samples, {0, 1}, opt.threads);
  SweepRecord rec;
  rec.experiment = "measurement_window";
  rec.params = {{"center", center}, {"width", width}, {"samples", static_cast<double>(samples)}};
  rec.values = {{"average", avg}, {"maximum", peak}, {"reduction_percent", 100.0 * (1.0 - avg / peak)}};
  return rec;
}

// ---- robustness: carrier state -------------------------------------------------------------

inline ProtocolConfig carrier_config(const DensityMatrix& carriers, double theta = gqd_optimal_theta) {
  ProtocolConfig cfg = standard_config(2, uniform_basis(2, theta));
  cfg.carrier_state = carriers;
  return cfg;
}

/// GQD re-optimized over both carrier thetas. Phases are left at 0: for carriers
/// diagonal in the {|+>,|->} product basis and |+> memories they act as local
/// unitaries on the memories.
inline OuterResult optimized_carrier_gqd(const DensityMatrix& carriers, const Options& opt) {
  OuterSpec spec;
  spec.warm_starts = {uniform_basis(2, gqd_optimal_theta)};
  const auto base = carrier_config(carriers);
  return maximize_bases(
      [&](const std::vector<BlochAngles>& b, const InnerBudget& ib) { return protocol_gqd(with_basis(base, b), ib); },
      spec, opt);
}

/// GQD versus the carrier mixing parameter. `gqd_fixed` mixes the classical
/// carriers with white noise, (1 - lambda) rho_C + lambda I/4, at the optimal
/// basis; `gqd_anticorrelated_mix` mixes in (|+-><+-| + |-+><-+|)/2 instead.
inline std::vector<SweepRecord> lambda_sweep(const std::vector<double>& lambdas, bool reoptimize, const Options& opt) {
  SweepSpec sweep;
  sweep.experiment = "lambda_sweep";
  sweep.parameter = "lambda";
  sweep.values = lambdas;
  sweep.threads = opt.threads;
  sweep.evaluate = [&](double lambda) {
    SweepRecord rec;
    const auto white = states::white_noise_carriers(lambda);
    rec.values.emplace_back("gqd_fixed", protocol_gqd(carrier_config(white), opt.inner));
    if (reoptimize) {
      const auto best = optimized_carrier_gqd(white, opt);
      rec.values.emplace_back("gqd_optimized", best.search_value);
      rec.values.emplace_back("theta1_optimized", best.basis[0].theta);
      rec.values.emplace_back("theta2_optimized", best.basis[1].theta);
      rec.evaluations = best.evaluations;
      rec.converged = best.converged;
    }
    rec.values.emplace_back("gqd_anticorrelated_mix",
                            protocol_gqd(carrier_config(states::lambda_carriers(lambda)), opt.inner));
    return rec;
  };
  return run_sweep(sweep);
}

inline double lambda_average(const Options& opt, double lo = 0.0, double hi = 0.1, double step = 0.005) {
  const auto rows = lambda_sweep(step_range(lo, hi, step), false, opt);
  double s = 0;
  for (const auto& r : rows) s += r.value("gqd_fixed");
  return s / static_cast<double>(rows.size());
}

/// Maximum GQD for eta |++><++| + (1 - eta)|--><--| carriers.
inline std::vector<SweepRecord> eta_sweep(const std::vector<double>& etas, const Options& opt) {
  SweepSpec sweep;
  sweep.experiment = "eta_sweep";
  sweep.parameter = "eta";
  sweep.values = etas;
  sweep.threads = opt.threads;
  sweep.evaluate = [&](double eta) {
    const auto carriers = states::eta_carriers(eta);
    const auto best = optimized_carrier_gqd(carriers, opt);
    SweepRecord rec;
    rec.values = {{"gqd_max", best.value},
                  {"gqd_fixed", protocol_gqd(carrier_config(carriers), opt.final)},
                  {"purity", purity(carriers)}};
    rec.evaluations = best.evaluations;
    rec.converged = best.converged;
    return rec;
  };
  return run_sweep(sweep);
}

/// Classical, anti-correlated and uncorrelated carriers at the optimal basis and re-optimized.
inline std::vector<SweepRecord> carrier_families(const Options& opt) {
  const std::vector<std::pair<std::string, DensityMatrix>> families = {
      {"classical", states::classical_carriers(2)},
      {"anticorrelated", states::weighted_carriers(0, 0, 0.5, 0.5)},
      {"uncorrelated", states::uncorrelated_carriers(2)}};
  std::vector<SweepRecord> rows;
  for (const auto& [name, carriers] : families) {
    const auto best = optimized_carrier_gqd(carriers, opt);
    SweepRecord rec;
    rec.experiment = "carrier_families";
    rec.tags = {{"carriers", name}};
    rec.values = {{"gqd_fixed", protocol_gqd(carrier_config(carriers), opt.final)},
                  {"gqd_optimized", best.value},
                  {"theta1", best.basis[0].theta},
                  {"theta2", best.basis[1].theta}};
    rec.evaluations = best.evaluations;
    rec.converged = best.converged;
    rows.push_back(std::move(rec));
  }
  return rows;
}

// ---- robustness: memory state --------------------------------------------------------------

inline ProtocolConfig pure_memory_config(double vartheta, double varphi) {
  ProtocolConfig cfg = standard_config(2, uniform_basis(2, gqd_optimal_theta));
  cfg.memories = {"bloch", {{"vartheta", vartheta}, {"varphi", varphi}}};
  return cfg;
}

inline std::vector<double> periodic_grid(std::size_t count) {
  std::vector<double> out(count);
  for (std::size_t k = 0; k < count; ++k) out[k] = 2 * pi * static_cast<double>(k) / static_cast<double>(count);
  return out;
}

/// GQD with M2 prepared in |psi(vartheta, varphi)>, carriers at the optimal
/// basis (`reoptimize` = false) or with all four carrier angles re-optimized.
inline std::vector<SweepRecord> memory_pure_grid(std::size_t n_vartheta, std::size_t n_varphi, bool reoptimize,
                                                 const Options& opt) {
  if (n_vartheta < 2 || n_varphi < 1) throw ConfigError("memory grid: resolution too small");
  const auto varthetas = linspace(0.0, pi, n_vartheta);
  const auto varphis = periodic_grid(n_varphi);
  return parallel_map(n_vartheta * n_varphi, [&](std::size_t idx) {
    const double vt = varthetas[idx / n_varphi], vp = varphis[idx % n_varphi];
    SweepRecord rec;
    rec.experiment = reoptimize ? "memory_pure_optimized" : "memory_pure_fixed";
    rec.params = {{"vartheta", vt}, {"varphi", vp}};
    const auto base = pure_memory_config(vt, vp);
    if (!reoptimize) {
      rec.values = {{"gqd", protocol_gqd(base, opt.inner)}};
      return rec;
    }
    OuterSpec spec;
    spec.phases = true;
    spec.warm_starts = {uniform_basis(2, gqd_optimal_theta), {{gqd_optimal_theta, 0.0}, {pi / 2, pi / 2}}};
    const auto best = maximize_bases(
        [&](const std::vector<BlochAngles>& b, const InnerBudget& ib) { return protocol_gqd(with_basis(base, b), ib); },
        spec, opt);
    rec.values = {{"gqd", best.value}};
    put_basis(rec, best.basis, true);
    rec.evaluations = best.evaluations;
    rec.converged = best.converged;
    return rec;
  }, opt.threads);
}

/// Mean GQD over vartheta in a `samples`-point window of width `width` around pi/2 (varphi = 0).
inline SweepRecord memory_window(const Options& opt, double width = pi / 10, std::size_t samples = 21) {
  auto g = [&](const std::vector<double>& x) { return protocol_gqd(pure_memory_config(x[0], 0.0), opt.inner); };
  SweepRecord rec;
  rec.experiment = "memory_window";
  rec.params = {{"width", width}, {"samples", static_cast<double>(samples)}};
  const double avg = uniform_average(g, {pi / 2}, width, samples, {0}, opt.threads);
  const double peak = g({pi / 2});
  rec.values = {{"average", avg}, {"maximum", peak}, {"reduction_percent", 100.0 * (1.0 - avg / peak)}};
  return rec;
}

/// GQD with memories in (A_j|+><+| + (1 - A_j)|-><-|) products over an (A1, A2)
/// grid, at the optimal basis and, optionally, re-optimized over all four angles.
inline std::vector<SweepRecord> memory_mixed_grid(const std::vector<double>& a_values, bool reoptimize,
                                                  const Options& opt) {
  const std::size_t m = a_values.size();
  return parallel_map(m * m, [&](std::size_t idx) {
    const double a1 = a_values[idx / m], a2 = a_values[idx % m];
    ProtocolConfig base = standard_config(2, uniform_basis(2, gqd_optimal_theta));
    base.memories = {"mixed", {{"A1", a1}, {"A2", a2}}};
    SweepRecord rec;
    rec.experiment = "memory_mixed";
    rec.params = {{"A1", a1}, {"A2", a2}};
    rec.values = {{"gqd_fixed", protocol_gqd(base, opt.inner)}};
    if (reoptimize) {
      OuterSpec spec;
      spec.phases = true;
      spec.warm_starts = {uniform_basis(2, gqd_optimal_theta)};
      const auto best = maximize_bases(
          [&](const std::vector<BlochAngles>& b, const InnerBudget& ib) { return protocol_gqd(with_basis(base, b), ib); },
          spec, opt);
      rec.values.emplace_back("gqd_optimized", best.search_value);
      rec.evaluations = best.evaluations;
      rec.converged = best.converged;
    }
    return rec;
  }, opt.threads);
}

// ---- effective channel checks ---------------------------------------------------------------

/// Semiclassicality and unitality of the effective memory channel on a grid of
/// carrier angles, the unital-yet-discordant witness, the single-memory variant
/// and the nonfactorizability of the two-memory channel.
inline std::vector<SweepRecord> appendix1(const Options& opt) {
  std::vector<SweepRecord> rows;
  // flag < 0: classify by value > 1e-6
  auto row = [&](std::string check, std::string where, double value, double flag, double expected) {
    if (flag < 0) flag = value > 1e-6 ? 1 : 0;
    SweepRecord rec;
    rec.experiment = "appendix1";
    rec.tags = {{"check", std::move(check)}, {"angles", std::move(where)}};
    rec.values = {{"value", value}, {"flag", flag}, {"expected", expected}};
    rows.push_back(std::move(rec));
  };
  auto fmt = [](std::initializer_list<double> xs) {
    std::string s;
    for (double x : xs) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%s%.4f", s.empty() ? "" : " ", x);
      s += buf;
    }
    return s;
  };
  auto on_axis = [](double t) { return std::abs(t) < 1e-12 || std::abs(t - pi) < 1e-12; };

  const std::vector<double> thetas = {0.0, pi / 4, pi / 2, gqd_optimal_theta, 3 * pi / 4, pi};
  for (double t1 : thetas)
    for (double t2 : thetas) {
      const auto cfg = standard_config(2, {{t1, 0.0}, {t2, 0.0}});
      const auto out = run_circuit(cfg).final_state;
      row("semiclassical", fmt({t1, t2, 0, 0}), pm_offdiagonal(out.matrix()), classify_semiclassical(cfg) ? 1 : 0,
          on_axis(t1) || on_axis(t2) ? 1 : 0);
    }
  const std::vector<double> phis = {0.0, pi / 2, pi, 3 * pi / 2};
  for (double t1 : {0.0, pi / 4, pi / 2, pi})
    for (double t2 : {0.0, pi / 4, pi / 2})
      for (double p1 : phis)
        for (double p2 : phis) {
          const auto cfg = standard_config(2, {{t1, p1}, {t2, p2}});
          const double coeff = std::cos(p1) * std::cos(p2) * std::sin(t1) * std::sin(t2);
          row("unital", fmt({t1, t2, p1, p2}), coeff, classify_unital(cfg) ? 1 : 0, std::abs(coeff) < 1e-12 ? 1 : 0);
        }

  {
    const std::vector<BlochAngles> witness = {{pi / 2, pi / 2}, {pi / 4, 0.0}};
    const auto cfg = standard_config(2, witness);
    const auto rho = run_circuit(cfg).final_state;
    row("unital_witness", fmt({pi / 2, pi / 4, pi / 2, 0}), discord_asym(rho, "M2", {"M1"}, opt.final).value,
        classify_unital(cfg) ? 1 : 0, 1);
  }
  for (double t2 : {pi / 4, 3 * pi / 4}) {
    const auto rho = run_circuit(single_memory_config(t2)).final_state;
    row("single_memory_discord", fmt({t2, 0}), discord_asym(rho, "M2", {"C1"}, opt.final).value, -1, 1);
    row("single_memory_reverse", fmt({t2, 0}), discord_asym(rho, "C1", {"M2"}, opt.final).value, -1, 0);
  }
  {
    const auto report = effective_channel_nonfactorizability_check(standard_config(2, uniform_basis(2, gqd_optimal_theta)));
    row("nonfactorizable", fmt({gqd_optimal_theta, gqd_optimal_theta, 0, 0}), report.trace_distance,
        report.trace_distance > 0.01 ? 1 : 0, 1);
    ProtocolConfig anti = standard_config(2, uniform_basis(2, gqd_optimal_theta));
    anti.carriers = {"anticorrelated", {}};
    const auto r2 = effective_channel_nonfactorizability_check(anti);
    row("nonfactorizable_anticorrelated", fmt({gqd_optimal_theta, gqd_optimal_theta, 0, 0}), r2.trace_distance,
        r2.trace_distance > 0.01 ? 1 : 0, 1);
    ProtocolConfig unc = standard_config(2, uniform_basis(2, gqd_optimal_theta));
    unc.carriers = {"uncorrelated", {}};
    const auto r3 = effective_channel_nonfactorizability_check(unc);
    row("factorizable_uncorrelated", fmt({gqd_optimal_theta, gqd_optimal_theta, 0, 0}), r3.trace_distance,
        r3.trace_distance > 1e-9 ? 1 : 0, 0);
  }
  return rows;
}

// ---- correlated dephasing ----------------------------------------------------------------------

/// Bipartite protocol with fully correlated dephasing of strength p on the
/// initial memories, post-selected on `outcome`.
inline ProtocolConfig noisy_config(double p, const std::vector<BlochAngles>& basis, std::vector<int> outcome = {0, 0},
                                   double mu = 1.0) {
  ProtocolConfig cfg = standard_config(2, basis);
  cfg.memory_noise = correlated_dephasing(p, mu);
  cfg.outcome = std::move(outcome);
  return cfg;
}

inline OuterSpec noisy_outer_spec() {
  OuterSpec spec;
  spec.phases = true;
  spec.grid = 17;
  spec.multistarts = 5;
  spec.stage_evaluations = 250;
  spec.free_evaluations = 300;
  spec.warm_starts = {uniform_basis(2, gqd_optimal_theta)};
  return spec;
}

/// Maximum GQD over all four carrier angles at noise strength p.
inline OuterResult noisy_maximum(double p, const Options& opt) {
  return maximize_bases(
      [&](const std::vector<BlochAngles>& b, const InnerBudget& ib) { return protocol_gqd(noisy_config(p, b), ib); },
      noisy_outer_spec(), opt);
}

/// Square root of a fixed target, so F(rho, target) costs one small eigendecomposition.
class FidelityTo {
 public:
  explicit FidelityTo(const DensityMatrix& target) : sqrt_target_(psd_sqrt(target.matrix())) {}
  double operator()(const DensityMatrix& rho) const {
    CMatrix m = sqrt_target_ * rho.matrix() * sqrt_target_;
    m = (m + m.adjoint()) * cplx(0.5);
    const auto ev = eigvalsh(m);
    double t = 0;
    for (double v : ev)
      if (v > tol::fidelity_floor) t += std::sqrt(v);
    return std::min(1.0, t * t);
  }

 private:
  CMatrix sqrt_target_;
};

struct TargetResult {
  std::vector<BlochAngles> basis;
  double fidelity = 0.0;
  double gqd = 0.0;
};

/// Carrier angles maximizing the fidelity of the noisy output with `target`,
/// and the GQD of the state they produce.
inline TargetResult best_fidelity_target(double p, const DensityMatrix& target, const Options& opt) {
  const FidelityTo fid(target);
  OuterSpec spec = noisy_outer_spec();
  spec.multistarts = 3;
  Options o = opt;
  const auto best = maximize_bases(
      [&](const std::vector<BlochAngles>& b, const InnerBudget&) { return fid(run_circuit(noisy_config(p, b)).final_state); },
      spec, o);
  TargetResult r;
  r.basis = best.basis;
  r.fidelity = best.value;
  r.gqd = gqd_min(run_circuit(noisy_config(p, best.basis)).final_state, opt.inner).value;
  return r;
}

/// x in [0,1] maximizing the GQD reached by fidelity-targeting tau(x): a grid
/// of `grid` points, then golden-section refinement around the best one.
inline std::pair<double, TargetResult> best_tau_target(double p, const Options& opt, std::size_t grid = 101) {
  auto eval = [&](double x) { return best_fidelity_target(p, states::tau(x), opt); };
  const auto xs = linspace(0.0, 1.0, grid);
  auto results = parallel_map(xs.size(), [&](std::size_t i) { return eval(xs[i]); }, opt.threads);
  std::size_t bi = 0;
  for (std::size_t i = 1; i < results.size(); ++i)
    if (results[i].gqd > results[bi].gqd) bi = i;
  double best_x = xs[bi];
  TargetResult best = results[bi];
  if (grid > 2) {
    const double h = 1.0 / static_cast<double>(grid - 1);
    double a = std::max(0.0, best_x - h), b = std::min(1.0, best_x + h);
    const double g = (std::sqrt(5.0) - 1) / 2;
    for (int it = 0; it < 12; ++it) {
      const double c = b - g * (b - a), d = a + g * (b - a);
      const auto rc = eval(c), rd = eval(d);
      if (rc.gqd > best.gqd) best_x = c, best = rc;
      if (rd.gqd > best.gqd) best_x = d, best = rd;
      (rc.gqd >= rd.gqd ? b : a) = rc.gqd >= rd.gqd ? d : c;
    }
  }
  return {best_x, best};
}

/// One point of the dephasing study: maximum GQD, GQD at the noiseless optimal
/// basis (rho_0(p)), and the GQD reached through fidelity with rho_1, rho_2 and tau(x).
inline SweepRecord noise_point(double p, const Options& opt, bool targets = true, std::size_t tau_grid = 101) {
  const auto best = noisy_maximum(p, opt);
  SweepRecord rec;
  rec.values = {{"gqd_max", best.value}};
  put_basis(rec, best.basis, true);
  rec.values.emplace_back("gqd_rho0",
                          protocol_gqd(noisy_config(p, uniform_basis(2, gqd_optimal_theta)), opt.final));
  rec.evaluations = best.evaluations;
  rec.converged = best.converged;
  if (targets) {
    const auto t1 = best_fidelity_target(p, states::bell_mixture_half(), opt);
    const auto t2 = best_fidelity_target(p, states::bell_mixture_third(), opt);
    const auto [x, tau] = best_tau_target(p, opt, tau_grid);
    rec.values.insert(rec.values.end(), {{"fidelity_rho1", t1.fidelity},
                                         {"gqd_rho1", t1.gqd},
                                         {"fidelity_rho2", t2.fidelity},
                                         {"gqd_rho2", t2.gqd},
                                         {"x_opt", x},
                                         {"gqd_tau", tau.gqd},
                                         {"gqd_envelope", std::max(tau.gqd, rec.value("gqd_rho0"))}});
  }
  return rec;
}

inline std::vector<SweepRecord> noise_sweep(const std::vector<double>& ps, const Options& opt, bool targets = true,
                                            std::size_t tau_grid = 101) {
  Options inner = opt;
  inner.threads = 1;  // parallelism goes across p
  SweepSpec sweep;
  sweep.experiment = "appendix2_noise";
  sweep.parameter = "p";
  sweep.values = ps;
  sweep.threads = opt.threads;
  sweep.evaluate = [&](double p) { return noise_point(p, inner, targets, tau_grid); };
  return run_sweep(sweep);
}

/// Smallest p in [lo, hi] where the noisy maximum reaches `level` (bisection;
/// assumes one crossing in the bracket).
inline double noise_crossover(double level, const Options& opt, double lo = 0.12, double hi = 0.5, int iterations = 7) {
  auto f = [&](double p) { return noisy_maximum(p, opt).value - level; };
  if (f(lo) >= 0 || f(hi) <= 0) throw NumericalError("noise_crossover: level not bracketed");
  for (int it = 0; it < iterations; ++it) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < 0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Every outcome of the noisy protocol at fixed angles: probability, GQD and
/// fidelities with rho_2 and the y = 1/3 singlet Werner state.
inline std::vector<SweepRecord> outcome_dependence(double p, const std::vector<BlochAngles>& basis, const Options& opt) {
  std::vector<SweepRecord> rows;
  const FidelityTo f_rho2(states::bell_mixture_third());
  const FidelityTo f_werner(states::singlet_werner(1.0 / 3.0));
  for (const auto& o : run_circuit_all(noisy_config(p, basis))) {
    SweepRecord rec;
    rec.experiment = "appendix2_outcomes";
    rec.tags = {{"outcome", std::to_string(o.outcome[0]) + std::to_string(o.outcome[1])}};
    rec.params = {{"p", p}};
    rec.values = {{"probability", o.probability},
                  {"identical", o.outcome[0] == o.outcome[1] ? 1.0 : 0.0},
                  {"gqd", gqd_min(o.final_state, opt.final).value},
                  {"fidelity_rho2", f_rho2(o.final_state)},
                  {"fidelity_werner_third", f_werner(o.final_state)}};
    rows.push_back(std::move(rec));
  }
  return rows;
}

// ---- scaling fits -----------------------------------------------------------------------------------

struct FitResult {
  std::string model;
  std::vector<std::pair<std::string, double>> coefficients;
  double residual_norm = 0.0;
  std::size_t points = 0;

  double coefficient(const std::string& key) const {
    for (const auto& [k, v] : coefficients)
      if (k == key) return v;
    throw std::out_of_range("FitResult: no coefficient '" + key + "'");
  }
};

namespace detail {

// Least squares for y ~ a u + c. Returns {a, c, residual norm}.
inline std::array<double, 3> affine_least_squares(const std::vector<double>& u, const std::vector<double>& y) {
  const double m = static_cast<double>(u.size());
  double su = 0, sy = 0, suu = 0, suy = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    su += u[i];
    sy += y[i];
    suu += u[i] * u[i];
    suy += u[i] * y[i];
  }
  const double det = m * suu - su * su;
  if (!(std::abs(det) > 1e-14 * std::max(1.0, m * suu))) return {0.0, sy / m, std::numeric_limits<double>::infinity()};
  const double a = (m * suy - su * sy) / det;
  const double c = (sy - a * su) / m;
  double r = 0;
  for (std::size_t i = 0; i < u.size(); ++i) r += std::pow(y[i] - a * u[i] - c, 2);
  return {a, c, std::sqrt(r)};
}

}  // namespace detail

inline FitResult linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw ConfigError("fit: x and y differ in length");
  if (x.size() < 3) throw ConfigError("fit: at least three points are required");
  const auto [a, c, r] = detail::affine_least_squares(x, y);
  if (!std::isfinite(r)) throw NumericalError("linear_fit: degenerate abscissae");
  return {"linear", {{"slope", a}, {"intercept", c}}, r, x.size()};
}

/// y ~ a exp(b x) + c by variable projection: for each b the pair (a, c) is a
/// linear least-squares solve; b is found by a grid on [b_lo, b_hi] plus Nelder-Mead.
inline FitResult exponential_fit(const std::vector<double>& x, const std::vector<double>& y, double b_lo = -5.0,
                                 double b_hi = 5.0) {
  if (x.size() != y.size()) throw ConfigError("fit: x and y differ in length");
  if (x.size() < 3) throw ConfigError("fit: at least three points are required");
  auto solve = [&](double b) {
    std::vector<double> u(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) u[i] = std::exp(b * x[i]);
    return detail::affine_least_squares(u, y);
  };
  SearchSpec s;
  s.dimension = 1;
  s.lower = {b_lo};
  s.upper = {b_hi};
  s.grid_points = 2001;
  s.multistarts = 3;
  s.tolerance = 1e-12;
  s.max_evaluations = 2000;
  const auto r = optimize(
      [&](const std::vector<double>& v) {
        const double res = solve(v[0])[2];
        return std::isfinite(res) ? res : 1e300;
      },
      s);
  const double b = r.argopt[0];
  const auto [a, c, res] = solve(b);
  return {"exponential", {{"a", a}, {"b", b}, {"c", c}}, res, x.size()};
}

/// Linear fit of the scaling-table GQD against N, and the exponential fit of the
/// excess xi(N) = G_M - per_link (N - 1).
inline std::vector<FitResult> scaling_fits(const std::vector<SweepRecord>& table, double per_link = max_one_way_discord) {
  std::vector<double> n, g, xi;
  for (const auto& r : table) {
    n.push_back(r.param("n"));
    g.push_back(r.value("G_M"));
    xi.push_back(g.back() - per_link * (n.back() - 1));
  }
  auto lin = linear_fit(n, g);
  auto ex = exponential_fit(n, xi);
  ex.model = "xi_exponential";
  return {lin, ex};
}

inline std::vector<SweepRecord> fit_records(const std::vector<FitResult>& fits) {
  std::vector<SweepRecord> rows;
  for (const auto& f : fits)
    for (const auto& [k, v] : f.coefficients) {
      SweepRecord rec;
      rec.experiment = "fits";
      rec.tags = {{"model", f.model}, {"coefficient", k}};
      rec.values = {{"value", v}, {"residual_norm", f.residual_norm}, {"points", static_cast<double>(f.points)}};
      rows.push_back(std::move(rec));
    }
  return rows;
}

// ---- GHZ carriers -----------------------------------------------------------------------------

/// Carriers in (|+++> + |--->)/sqrt 2 with pairs 1, 2 interacting: maximum GQD of
/// M1 M2 C3 and of M1 M2, and the GQD of the initial carrier state.
inline SweepRecord ghz_study(const Options& opt) {
  OuterSpec spec;
  spec.grid = 17;
  const auto three = maximize_bases(
      [&](const std::vector<BlochAngles>& b, const InnerBudget& ib) {
        return gqd_min(run_ghz_variant(b).final_state, ib).value;
      },
      spec, opt);
  const auto two = maximize_bases(
      [&](const std::vector<BlochAngles>& b, const InnerBudget& ib) {
        return gqd_min(partial_trace(run_ghz_variant(b).final_state, {"M1", "M2"}), ib).value;
      },
      spec, opt);
  SweepRecord rec;
  rec.experiment = "ghz_variant";
  rec.values = {{"gqd_initial", gqd_min(states::ghz_pm(3), opt.final).value},
                {"gqd_M1M2C3", three.value},
                {"theta_M1M2C3", three.theta_mean()},
                {"gqd_M1M2", two.value},
                {"theta_M1M2", two.theta_mean()}};
  rec.evaluations = three.evaluations + two.evaluations;
  rec.converged = three.converged && two.converged;
  return rec;
}

}  // namespace discordnet::experiments
