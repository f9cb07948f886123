#include <gtest/gtest.h>

#include <complex>
#include <numbers>
#include <random>

#include "discordnet/correlations.hpp"
#include "discordnet/protocol.hpp"

using namespace discordnet;
constexpr double pi = std::numbers::pi;

namespace {

// Independent two-pair circuit: index bits (c1 c2 m1 m2), CZ phases written
// out, projection and carrier trace by explicit loops.
CMatrix circuit_oracle(double t1, double t2, double p1, double p2, int o1 = 0, int o2 = 0) {
  auto ket = [](double t, double p, int o) {
    const cplx a = std::cos(t / 2), b = std::polar(std::sin(t / 2), p);
    return o == 0 ? std::array<cplx, 2>{a, b} : std::array<cplx, 2>{-std::conj(b), std::conj(a)};
  };
  const auto k1 = ket(t1, p1, o1), k2 = ket(t2, p2, o2);
  const double s = 1 / std::sqrt(2.0);
  const cplx plus[2] = {s, s}, minus[2] = {s, -s};
  // carriers: (|++><++| + |--><--|)/2 ; memories |++>
  CMatrix rho(16, 16);
  for (int branch = 0; branch < 2; ++branch) {
    const cplx* c = branch == 0 ? plus : minus;
    std::vector<cplx> v(16);
    for (int i = 0; i < 16; ++i) {
      const int c1 = (i >> 3) & 1, c2 = (i >> 2) & 1, m1 = (i >> 1) & 1, m2 = i & 1;
      const double sign = ((c1 & m1) ^ (c2 & m2)) ? -1.0 : 1.0;
      v[i] = sign * c[c1] * c[c2] * plus[m1] * plus[m2];
    }
    for (int i = 0; i < 16; ++i)
      for (int j = 0; j < 16; ++j) rho(i, j) += 0.5 * v[i] * std::conj(v[j]);
  }
  CMatrix out(4, 4);
  for (int m = 0; m < 4; ++m)
    for (int n = 0; n < 4; ++n) {
      cplx acc = 0;
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
          const cplx bra_a = std::conj(k1[a >> 1] * k2[a & 1]);
          const cplx ket_b = k1[b >> 1] * k2[b & 1];
          acc += bra_a * rho((a << 2) | m, (b << 2) | n) * ket_b;
        }
      out(m, n) = acc;
    }
  const cplx tr = out.trace();
  return out * (1.0 / tr);
}

}  // namespace

TEST(Protocol, CircuitMatchesClosedFormAndOracleOnRandomAngles) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> th(0, pi), ph(0, 2 * pi);
  for (int rep = 0; rep < 50; ++rep) {
    const double t1 = th(rng), t2 = th(rng), p1 = ph(rng), p2 = ph(rng);
    const auto circuit = run_circuit(standard_config(2, {{t1, p1}, {t2, p2}})).final_state.matrix();
    EXPECT_LT(max_abs_diff(circuit, final_state_closed_form(t1, t2, p1, p2).matrix()), 1e-10);
    EXPECT_LT(max_abs_diff(circuit, circuit_oracle(t1, t2, p1, p2)), 1e-10);
  }
}

TEST(Protocol, EquatorialBasesLeaveClassicalMemories) {
  const auto rho = run_circuit(standard_config(2, uniform_basis(2, pi / 2))).final_state;
  CMatrix expect(4, 4);
  expect(0, 0) = expect(3, 3) = 0.5;
  EXPECT_LT(max_abs_diff(rho.matrix(), expect), 1e-12);
  EXPECT_LT(gqd_min(rho).value, 1e-8);
}

TEST(Protocol, ComputationalCarrierBasisGivesNoDiscord) {
  for (double t : {0.0, pi}) {
    const auto rho = run_circuit(standard_config(2, {{t, 0.0}, {1.0, 0.3}})).final_state;
    EXPECT_LT(discord_asym(rho, "M2").value, 1e-8);
    EXPECT_LT(discord_asym(rho, "M1").value, 1e-8);
    EXPECT_LT(gqd_min(rho).value, 1e-8);
  }
}

TEST(Protocol, MaximalOneWayDiscordAtKnownAngles) {
  const auto rho = run_circuit(standard_config(2, {{pi / 2, 0.0}, {pi / 4, 0.0}})).final_state;
  EXPECT_NEAR(discord_asym(rho, "M2", {"M1"}).value, 0.2018, 1e-3);
}

TEST(Protocol, BipartiteGqdAtOptimalTheta) {
  const auto rho = run_circuit(standard_config(2, uniform_basis(2, 0.9458))).final_state;
  EXPECT_NEAR(gqd_min(rho).value, 0.2198, 1e-3);
}

TEST(Protocol, OutcomeIndependenceWithoutNoise) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> th(0.05, pi - 0.05), ph(0, 2 * pi);
  for (int rep = 0; rep < 4; ++rep) {
    ProtocolConfig cfg = standard_config(3, {{th(rng), ph(rng)}, {th(rng), ph(rng)}, {th(rng), ph(rng)}});
    const auto outs = run_circuit_all(cfg);
    ASSERT_EQ(outs.size(), 8u);
    double total = 0;
    for (const auto& o : outs) total += o.probability;
    EXPECT_NEAR(total, 1.0, 1e-10);
    const double g0 = gqd_min(outs[0].final_state, InnerBudget::fast()).value;
    const double d0 = discord_asym(partial_trace(outs[0].final_state, {"M1", "M2"}), "M2").value;
    for (const auto& o : outs) {
      EXPECT_NEAR(gqd_min(o.final_state, InnerBudget::fast()).value, g0, 1e-6);
      EXPECT_NEAR(discord_asym(partial_trace(o.final_state, {"M1", "M2"}), "M2").value, d0, 1e-9);
    }
  }
}

TEST(Protocol, OutcomeDependenceUnderFullCorrelatedDephasing) {
  ProtocolConfig cfg = standard_config(2, uniform_basis(2, 0.9553, 3 * pi / 4));
  cfg.memory_noise = correlated_dephasing(1.0, 1.0);
  const auto outs = run_circuit_all(cfg);
  ASSERT_EQ(outs.size(), 4u);
  for (const auto& o : outs) EXPECT_NEAR(o.probability, 0.25, 1e-9);
  const double same = gqd_min(outs[0].final_state).value;
  const double diff = gqd_min(outs[1].final_state).value;
  EXPECT_NEAR(same, 1.0 / 3, 2e-3);
  EXPECT_NEAR(diff, 0.1258, 3e-3);
  EXPECT_GT(std::abs(same - diff), 0.1);
}

TEST(Protocol, OrderingsAgreeForPairwiseGates) {
  ProtocolConfig a = standard_config(3, {{0.4, 1.0}, {1.3, 2.0}, {2.1, 5.0}});
  ProtocolConfig b = a;
  b.ordering = Ordering::interleaved;
  for (const auto& bits : all_outcomes(3)) {
    a.outcome = b.outcome = bits;
    const auto ra = run_circuit(a), rb = run_circuit(b);
    EXPECT_LT(max_abs_diff(ra.final_state.matrix(), rb.final_state.matrix()), 1e-12);
    EXPECT_NEAR(ra.probability, rb.probability, 1e-12);
  }
}

TEST(Protocol, RetentionRuleKeepsCarriersOfIdleIndices) {
  ProtocolConfig cfg;
  cfg.n = 3;
  cfg.interactions = {2};
  cfg.carrier_basis = {{0.9, 0.3}};
  const auto r = run_circuit(cfg);
  EXPECT_EQ(r.retained_labels, (Labels{"C1", "M2", "C3"}));
  EXPECT_EQ(r.final_state.labels(), r.retained_labels);
}

TEST(Protocol, StructurePatternAtGenericAngles) {
  // D_{X|Y} vanishes when the measured Y is a carrier and not when it is an interacted memory
  ProtocolConfig cfg;
  cfg.n = 3;
  cfg.interactions = {1, 2};
  cfg.carrier_basis = uniform_basis(2, 0.9, 0.3);
  const auto rho = run_circuit(cfg).final_state;
  const Labels l = rho.labels();
  for (const auto& x : l)
    for (const auto& y : l) {
      if (x == y) continue;
      const double d = discord_asym(partial_trace(rho, {x, y}), y, {x}).value;
      if (y.front() == 'C') EXPECT_LT(d, 1e-8) << x << "|" << y;
      else EXPECT_GT(d, 1e-4) << x << "|" << y;
    }
}

TEST(Protocol, B92VariantIsOutcomeAndPhaseIndependent) {
  const auto ref = run_b92_variant(0.0);
  ASSERT_EQ(ref.size(), 2u);
  EXPECT_NEAR(ref[0].probability, 0.5, 1e-12);
  EXPECT_NEAR(ref[1].probability, 0.5, 1e-12);
  EXPECT_LT(max_abs_diff(ref[0].final_state.matrix(), ref[1].final_state.matrix()), 1e-10);
  for (double phi : {0.7, 2.0, 4.4}) {
    const auto other = run_b92_variant(phi);
    EXPECT_LT(max_abs_diff(other[0].final_state.matrix(), ref[0].final_state.matrix()), 1e-10);
  }
  const auto& rho = ref[0].final_state;
  EXPECT_EQ(rho.labels(), (Labels{"C1", "M2"}));
  EXPECT_LT(discord_asym(rho, "C1", {"M2"}).value, 1e-8);  // measuring the carrier
  EXPECT_GT(discord_asym(rho, "M2", {"C1"}).value, 1e-3);  // measuring the memory
}

TEST(Protocol, SingleMemoryVariantDiscord) {
  for (double t2 : {pi / 4, 3 * pi / 4}) {
    const auto rho = run_circuit(single_memory_config(t2)).final_state;
    EXPECT_NEAR(discord_asym(rho, "M2", {"C1"}).value, 0.2018, 1e-3);
  }
}

TEST(Protocol, GhzCarriersInitialGqd) {
  EXPECT_NEAR(gqd_min(states::ghz_pm(3)).value, 1.0, 1e-3);
  const auto r = run_ghz_variant(uniform_basis(2, 0.9925));
  EXPECT_EQ(r.retained_labels, (Labels{"M1", "M2", "C3"}));
}

TEST(Protocol, SemiclassicalOnlyOnAxes) {
  EXPECT_TRUE(classify_semiclassical(standard_config(2, {{0.0, 0.0}, {1.2, 0.0}})));
  EXPECT_TRUE(classify_semiclassical(standard_config(2, {{0.7, 0.4}, {pi, 0.0}})));
  EXPECT_FALSE(classify_semiclassical(standard_config(2, uniform_basis(2, 0.9458))));
  EXPECT_FALSE(classify_semiclassical(standard_config(2, {{0.3, 1.1}, {2.5, 4.0}})));
}

TEST(Protocol, UnitalityMatchesClosedForm) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> th(0, pi), ph(0, 2 * pi);
  for (int rep = 0; rep < 20; ++rep) {
    const double t1 = th(rng), t2 = th(rng), p1 = ph(rng), p2 = ph(rng);
    ProtocolConfig cfg = standard_config(2, {{t1, p1}, {t2, p2}});
    cfg.memories = {"maximally_mixed", {}};
    const auto out = run_circuit(cfg).final_state.matrix();
    EXPECT_LT(max_abs_diff(out, unital_test_closed_form(t1, t2, p1, p2)), 1e-12);
  }
  EXPECT_TRUE(classify_unital(standard_config(2, {{1.0, pi / 2}, {2.0, 0.4}})));
  EXPECT_TRUE(classify_unital(standard_config(2, {{pi / 2, pi / 2}, {pi / 4, 0.0}})));
  EXPECT_FALSE(classify_unital(standard_config(2, uniform_basis(2, pi / 4))));
}

TEST(Protocol, Nonfactorizability) {
  const auto r = effective_channel_nonfactorizability_check(standard_config(2, uniform_basis(2, 0.9458)));
  EXPECT_GT(r.trace_distance, 0.01);
  ProtocolConfig unc = standard_config(2, uniform_basis(2, 0.9458));
  unc.carriers = {"uncorrelated", {}};
  EXPECT_LT(effective_channel_nonfactorizability_check(unc).trace_distance, 1e-9);
}

TEST(Protocol, ConfigErrors) {
  ProtocolConfig cfg = standard_config(2, uniform_basis(1, 0.5));
  EXPECT_THROW(run_circuit(cfg), ConfigError);  // basis count
  cfg = standard_config(2, uniform_basis(2, 0.5));
  cfg.interactions = {3};
  EXPECT_THROW(run_circuit(cfg), ConfigError);
  cfg.interactions = {1, 1};
  EXPECT_THROW(run_circuit(cfg), ConfigError);
  cfg = standard_config(2, uniform_basis(2, 0.5));
  cfg.outcome = {0};
  EXPECT_THROW(run_circuit(cfg), ConfigError);
  cfg.outcome = {};
  cfg.carrier_basis[0].theta = 4.0;
  EXPECT_THROW(run_circuit(cfg), ConfigError);
  cfg = standard_config(2, uniform_basis(2, 0.5));
  cfg.gate = GateKind::local_unitary;
  EXPECT_THROW(run_circuit(cfg), ConfigError);
}

TEST(Protocol, ZeroProbabilityPostSelection) {
  ProtocolConfig cfg = standard_config(2, {{0.0, 0.0}, {0.0, 0.0}});
  cfg.carrier_state = DensityMatrix(PureState({"C1", "C2"}, states::product_ket({states::ket0(), states::ket0()})));
  cfg.outcome = {1, 0};
  EXPECT_THROW(run_circuit(cfg), NumericalError);
  EXPECT_EQ(run_circuit_all(cfg).size(), 1u);
}
