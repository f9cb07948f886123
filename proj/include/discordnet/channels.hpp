#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "discordnet/qstate.hpp"

namespace discordnet {

namespace tol {
inline constexpr double kraus_completeness = 1e-10;
inline constexpr double zero_probability = 1e-12;
inline constexpr double unitary = 1e-10;
}  // namespace tol

enum class GateKind { controlled_z, controlled_hadamard, local_unitary };

struct GateSpec {
  GateKind kind = GateKind::controlled_z;
  Label control;  // unused for local_unitary
  Label target;
  CMatrix matrix;  // single-qubit unitary for local_unitary

  static GateSpec cz(Label control, Label target) {
    return {GateKind::controlled_z, std::move(control), std::move(target), {}};
  }
  static GateSpec ch(Label control, Label target) {
    return {GateKind::controlled_hadamard, std::move(control), std::move(target), {}};
  }
  static GateSpec local(Label target, CMatrix u) { return {GateKind::local_unitary, {}, std::move(target), std::move(u)}; }

  /// The operator on (control, target), or the 2x2 for a local unitary.
  CMatrix unitary() const {
    auto controlled = [](const CMatrix& u) {
      CMatrix m = CMatrix::identity(4);
      for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) m(2 + i, 2 + j) = u(i, j);
      return m;
    };
    switch (kind) {
      case GateKind::controlled_z: return controlled(pauli::Z());
      case GateKind::controlled_hadamard: return controlled(pauli::H());
      case GateKind::local_unitary: return matrix;
    }
    return {};
  }
};

inline bool is_unitary(const CMatrix& u, double tolerance = tol::unitary) {
  if (!u.square()) return false;
  return max_abs_diff(u.adjoint() * u, CMatrix::identity(u.rows())) <= tolerance;
}

inline DensityMatrix apply_gate(const DensityMatrix& rho, const GateSpec& g) {
  const CMatrix u = g.unitary();
  if (g.kind == GateKind::local_unitary) {
    if (u.rows() != 2 || !is_unitary(u)) throw ConfigError("apply_gate: local gate must be a 2x2 unitary");
    const std::size_t pos[] = {rho.position(g.target)};
    return DensityMatrix::normalized(rho.labels(), conjugate_local(rho.matrix(), u, pos));
  }
  if (g.control == g.target) throw ConfigError("apply_gate: control and target coincide");
  const std::size_t pos[] = {rho.position(g.control), rho.position(g.target)};
  return DensityMatrix::normalized(rho.labels(), conjugate_local(rho.matrix(), u, pos));
}

/// Kraus operators acting jointly on `labels` (first label most significant).
struct KrausChannel {
  Labels labels;
  std::vector<CMatrix> operators;
  double p = 0.0;   // noise strength, for the dephasing family
  double mu = 0.0;  // correlation strength, for the dephasing family

  double completeness_defect() const {
    if (operators.empty()) return std::numeric_limits<double>::infinity();
    CMatrix s(operators.front().cols(), operators.front().cols());
    for (const auto& k : operators) s += k.adjoint() * k;
    return max_abs_diff(s, CMatrix::identity(s.rows()));
  }
};

/// Two-qubit dephasing with correlated Z errors:
/// K1 = sqrt(1 - p + p mu/2) II, K2 = sqrt(p(1-mu)/2) ZI, K3 = sqrt(p(1-mu)/2) IZ, K4 = sqrt(p mu/2) ZZ.
/// K1 reduces to sqrt(1 - p/2) at mu = 1; for mu < 1 it absorbs the extra weight
/// of K2, K3 so the set stays complete.
inline KrausChannel correlated_dephasing(double p, double mu, Labels labels = {"M1", "M2"}) {
  if (!(p >= 0 && p <= 1) || !(mu >= 0 && mu <= 1)) throw ConfigError("correlated_dephasing: p, mu must lie in [0,1]");
  if (labels.size() != 2) throw ConfigError("correlated_dephasing acts on exactly two qubits");
  const CMatrix I = pauli::I(), Z = pauli::Z();
  KrausChannel ch{std::move(labels), {}, p, mu};
  ch.operators.push_back(kron(I, I) * cplx(std::sqrt(1 - p + p * mu / 2)));
  ch.operators.push_back(kron(Z, I) * cplx(std::sqrt(p / 2 * (1 - mu))));
  ch.operators.push_back(kron(I, Z) * cplx(std::sqrt(p / 2 * (1 - mu))));
  ch.operators.push_back(kron(Z, Z) * cplx(std::sqrt(p / 2 * mu)));
  return ch;
}

inline DensityMatrix apply_kraus(const DensityMatrix& rho, const KrausChannel& ch) {
  const std::size_t d = std::size_t{1} << ch.labels.size();
  for (const auto& k : ch.operators)
    if (k.rows() != d || k.cols() != d) throw ConfigError("apply_kraus: operator dimension does not match labels");
  if (!(ch.completeness_defect() <= tol::kraus_completeness)) {
    throw ConfigError("apply_kraus: Kraus operators violate completeness");
  }
  std::vector<std::size_t> pos;
  for (const auto& l : ch.labels) pos.push_back(rho.position(l));
  CMatrix out(rho.dim(), rho.dim());
  for (const auto& k : ch.operators) out += conjugate_local(rho.matrix(), k, pos);
  return DensityMatrix::normalized(rho.labels(), std::move(out));
}

/// Per-label rank-1 projective qubit bases {|psi(theta, phi)>, |psi_perp>}.
struct MeasurementBasis {
  std::vector<std::pair<Label, BlochAngles>> angles;

  void validate() const {
    for (const auto& [l, a] : angles) {
      (void)l;
      require_bloch_range(a.theta, a.phi);
    }
  }
};

struct MeasurementResult {
  DensityMatrix state;  // unmeasured labels, original order
  double probability;
};

/// Unnormalized post-measurement operator on the unmeasured qubits, and the
/// retained labels. `outcomes[k]` selects psi (0) or psi_perp (1) for entry k.
inline std::pair<CMatrix, Labels> project_out(const DensityMatrix& rho, const MeasurementBasis& basis,
                                              const std::vector<int>& outcomes) {
  if (outcomes.size() != basis.angles.size()) throw ConfigError("measure_project: one outcome bit per measured label");
  const std::size_t n = rho.qubits();
  std::vector<std::size_t> mpos;
  std::vector<std::vector<cplx>> vecs;
  for (std::size_t k = 0; k < basis.angles.size(); ++k) {
    const auto& [label, a] = basis.angles[k];
    mpos.push_back(rho.position(label));
    if (outcomes[k] != 0 && outcomes[k] != 1) throw ConfigError("measure_project: outcome bits must be 0 or 1");
    vecs.push_back(outcomes[k] == 0 ? bloch_vector(a.theta, a.phi) : bloch_vector_perp(a.theta, a.phi));
  }
  Labels kept_labels;
  std::vector<std::size_t> kpos;
  for (std::size_t p = 0; p < n; ++p)
    if (std::find(mpos.begin(), mpos.end(), p) == mpos.end()) {
      kpos.push_back(p);
      kept_labels.push_back(rho.labels()[p]);
    }
  if (kpos.empty()) throw ConfigError("measure_project: at least one label must remain unmeasured");
  detail::require_distinct([&] {
    Labels ml;
    for (const auto& [l, a] : basis.angles) ml.push_back(l);
    return ml;
  }());

  const std::size_t km = mpos.size();
  const std::size_t dm = std::size_t{1} << km;
  std::vector<std::size_t> midx(dm);
  std::vector<cplx> weight(dm);  // <v|m> for the measured product ket
  for (std::size_t m = 0; m < dm; ++m) {
    std::size_t idx = 0;
    cplx w = 1.0;
    for (std::size_t t = 0; t < km; ++t) {
      const std::size_t bit = (m >> (km - 1 - t)) & 1u;
      if (bit) idx |= detail::bit_of(mpos[t], n);
      w *= std::conj(vecs[t][bit]);
    }
    midx[m] = idx;
    weight[m] = w;
  }
  const std::size_t dk = std::size_t{1} << kpos.size();
  std::vector<std::size_t> kidx(dk);
  for (std::size_t a = 0; a < dk; ++a) {
    std::size_t idx = 0;
    for (std::size_t t = 0; t < kpos.size(); ++t)
      if ((a >> (kpos.size() - 1 - t)) & 1u) idx |= detail::bit_of(kpos[t], n);
    kidx[a] = idx;
  }
  const CMatrix& r = rho.matrix();
  CMatrix out(dk, dk);
  for (std::size_t a = 0; a < dk; ++a)
    for (std::size_t b = 0; b < dk; ++b) {
      cplx s = 0;
      for (std::size_t m = 0; m < dm; ++m) {
        if (weight[m] == cplx{}) continue;
        cplx row = 0;
        for (std::size_t mm = 0; mm < dm; ++mm) row += r(kidx[a] | midx[m], kidx[b] | midx[mm]) * std::conj(weight[mm]);
        s += weight[m] * row;
      }
      out(a, b) = s;
    }
  return {std::move(out), std::move(kept_labels)};
}

inline MeasurementResult measure_project(const DensityMatrix& rho, const MeasurementBasis& basis,
                                         const std::vector<int>& outcomes) {
  basis.validate();
  auto [m, labels] = project_out(rho, basis, outcomes);
  const double prob = m.trace().real();
  if (!(prob > tol::zero_probability)) {
    throw NumericalError("measure_project: outcome has zero probability (" + std::to_string(prob) + ")");
  }
  return {DensityMatrix::normalized(std::move(labels), std::move(m)), prob};
}

/// All 2^k outcome bit-strings in lexicographic order.
inline std::vector<std::vector<int>> all_outcomes(std::size_t k) {
  std::vector<std::vector<int>> out;
  for (std::size_t m = 0; m < (std::size_t{1} << k); ++m) {
    std::vector<int> bits(k);
    for (std::size_t t = 0; t < k; ++t) bits[t] = static_cast<int>((m >> (k - 1 - t)) & 1u);
    out.push_back(std::move(bits));
  }
  return out;
}

}  // namespace discordnet
