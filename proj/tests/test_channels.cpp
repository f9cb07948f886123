#include <gtest/gtest.h>

#include <numbers>

#include "discordnet/channels.hpp"
#include "discordnet/states.hpp"

using namespace discordnet;
constexpr double pi = std::numbers::pi;

TEST(Channels, GateMatricesAreUnitary) {
  EXPECT_TRUE(is_unitary(GateSpec::cz("a", "b").unitary()));
  EXPECT_TRUE(is_unitary(GateSpec::ch("a", "b").unitary()));
  EXPECT_FALSE(is_unitary(CMatrix{{1, 1}, {0, 1}}));
}

TEST(Channels, CzIsSymmetricInItsQubits) {
  const auto rho = tensor(DensityMatrix(bloch_state(0.3, 0.2, "a")), DensityMatrix(bloch_state(1.9, 4.0, "b")));
  const auto x = apply_gate(rho, GateSpec::cz("a", "b"));
  const auto y = apply_gate(rho, GateSpec::cz("b", "a"));
  EXPECT_LT(max_abs_diff(x.matrix(), y.matrix()), 1e-14);
}

TEST(Channels, GateErrors) {
  const auto rho = DensityMatrix::maximally_mixed({"a", "b"});
  EXPECT_THROW(apply_gate(rho, GateSpec::cz("a", "a")), ConfigError);
  EXPECT_THROW(apply_gate(rho, GateSpec::cz("a", "zz")), ConfigError);
  EXPECT_THROW(apply_gate(rho, GateSpec::local("a", CMatrix{{1, 1}, {0, 1}})), ConfigError);
}

TEST(Channels, DephasingKrausCompleteOverParameterGrid) {
  for (double p = 0; p <= 1.0; p += 0.125)
    for (double mu = 0; mu <= 1.0; mu += 0.25) EXPECT_LT(correlated_dephasing(p, mu).completeness_defect(), 1e-12);
  EXPECT_THROW(correlated_dephasing(1.2, 0.5), ConfigError);
  EXPECT_THROW(correlated_dephasing(0.5, -0.1), ConfigError);
}

TEST(Channels, FullCorrelatedDephasingOfPlusPlus) {
  const auto pp = states::plus_memories(2);
  const auto out = apply_kraus(pp, correlated_dephasing(1.0, 1.0));
  const auto expect = states::classical_carriers(2, {"M1", "M2"});
  EXPECT_LT(max_abs_diff(out.matrix(), expect.matrix()), 1e-12);
}

TEST(Channels, IncompleteKrausRejected) {
  KrausChannel ch{{"M1", "M2"}, {CMatrix::identity(4) * cplx(0.5)}, 0, 0};
  EXPECT_THROW(apply_kraus(states::plus_memories(2), ch), ConfigError);
}

TEST(Channels, OutcomeProbabilitiesSumToOne) {
  const auto rho = states::werner_w(3, 0.2, {"a", "b", "c"});
  MeasurementBasis b{{{"a", {0.4, 1.0}}, {"c", {2.2, 5.0}}}};
  double total = 0;
  for (const auto& o : all_outcomes(2)) {
    const auto r = measure_project(rho, b, o);
    total += r.probability;
    EXPECT_EQ(r.state.labels(), (Labels{"b"}));
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(Channels, ZeroProbabilityOutcomeIsNumericalError) {
  const auto z0 = DensityMatrix(PureState({"a", "b"}, states::product_ket({states::ket0(), states::ket0()})));
  MeasurementBasis b{{{"a", {0.0, 0.0}}}};
  EXPECT_NO_THROW(measure_project(z0, b, {0}));
  EXPECT_THROW(measure_project(z0, b, {1}), NumericalError);
}

TEST(Channels, MeasurementBasisRangeChecked) {
  const auto rho = DensityMatrix::maximally_mixed({"a", "b"});
  MeasurementBasis b{{{"a", {pi + 0.1, 0.0}}}};
  EXPECT_THROW(measure_project(rho, b, {0}), ConfigError);
}

TEST(Channels, AllOutcomesLexicographic) {
  const auto o = all_outcomes(2);
  ASSERT_EQ(o.size(), 4u);
  EXPECT_EQ(o[1], (std::vector<int>{0, 1}));
  EXPECT_EQ(o[2], (std::vector<int>{1, 0}));
}
