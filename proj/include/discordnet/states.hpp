#pragma once

// Named state families used by the distribution protocol and its benchmarks.

#include <cmath>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "discordnet/qstate.hpp"

namespace discordnet::states {

inline Labels numbered(std::string_view prefix, std::size_t n, std::size_t first = 1) {
  Labels out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(std::string(prefix) + std::to_string(first + i));
  return out;
}

inline std::vector<cplx> ket0() { return {1.0, 0.0}; }
inline std::vector<cplx> ket1() { return {0.0, 1.0}; }
inline std::vector<cplx> ket_plus() { return {M_SQRT1_2, M_SQRT1_2}; }
inline std::vector<cplx> ket_minus() { return {M_SQRT1_2, -M_SQRT1_2}; }

inline std::vector<cplx> product_ket(const std::vector<std::vector<cplx>>& factors) {
  std::vector<cplx> v{1.0};
  for (const auto& f : factors) v = kron(v, f);
  return v;
}

inline std::vector<cplx> repeated_ket(const std::vector<cplx>& one, std::size_t n) {
  return product_ket(std::vector<std::vector<cplx>>(n, one));
}

inline void require_unit_interval(double x, const char* name) {
  if (!(x >= 0.0 && x <= 1.0)) throw ConfigError(std::string(name) + " must lie in [0, 1]");
}

inline void require_qubits(std::size_t n, std::size_t lo, std::size_t hi, const char* what) {
  if (n < lo || n > hi) {
    throw ConfigError(std::string(what) + ": qubit count " + std::to_string(n) + " outside [" + std::to_string(lo) +
                      ", " + std::to_string(hi) + "]");
  }
}

/// Weighted mixture of pure product kets.
inline DensityMatrix mixture(Labels labels, const std::vector<std::pair<double, std::vector<cplx>>>& terms) {
  const std::size_t d = std::size_t{1} << labels.size();
  CMatrix m(d, d);
  for (const auto& [w, ket] : terms)
    if (w != 0.0) m += CMatrix::projector(ket) * cplx(w);
  return DensityMatrix::normalized(std::move(labels), std::move(m));
}

// ---- carriers -----------------------------------------------------------

/// (|+...+><+...+| + |-...-><-...-|) / 2 on n carriers.
inline DensityMatrix classical_carriers(std::size_t n, Labels labels = {}) {
  require_qubits(n, 1, 10, "classical_carriers");
  if (labels.empty()) labels = numbered("C", n);
  return mixture(std::move(labels), {{0.5, repeated_ket(ket_plus(), n)}, {0.5, repeated_ket(ket_minus(), n)}});
}

/// Two carriers mixed with the anti-correlated pair at weight lambda.
inline DensityMatrix lambda_carriers(double lambda, Labels labels = {}) {
  require_unit_interval(lambda, "lambda");
  if (labels.empty()) labels = numbered("C", 2);
  const auto pp = product_ket({ket_plus(), ket_plus()});
  const auto mm = product_ket({ket_minus(), ket_minus()});
  const auto pm = product_ket({ket_plus(), ket_minus()});
  const auto mp = product_ket({ket_minus(), ket_plus()});
  return mixture(std::move(labels),
                 {{(1 - lambda) / 2, pp}, {(1 - lambda) / 2, mm}, {lambda / 2, pm}, {lambda / 2, mp}});
}

/// eta |++><++| + (1 - eta) |--><--|
inline DensityMatrix eta_carriers(double eta, Labels labels = {}) {
  require_unit_interval(eta, "eta");
  if (labels.empty()) labels = numbered("C", 2);
  return mixture(std::move(labels), {{eta, product_ket({ket_plus(), ket_plus()})},
                                     {1 - eta, product_ket({ket_minus(), ket_minus()})}});
}

/// Generalized two-carrier mixture with independent weights on ++, --, +-, -+.
inline DensityMatrix weighted_carriers(double w_pp, double w_mm, double w_pm, double w_mp, Labels labels = {}) {
  for (double w : {w_pp, w_mm, w_pm, w_mp}) require_unit_interval(w, "carrier weight");
  if (std::abs(w_pp + w_mm + w_pm + w_mp - 1.0) > 1e-12) throw ConfigError("carrier weights must sum to 1");
  if (labels.empty()) labels = numbered("C", 2);
  return mixture(std::move(labels), {{w_pp, product_ket({ket_plus(), ket_plus()})},
                                     {w_mm, product_ket({ket_minus(), ket_minus()})},
                                     {w_pm, product_ket({ket_plus(), ket_minus()})},
                                     {w_mp, product_ket({ket_minus(), ket_plus()})}});
}

/// (1 - lambda) times the classical carrier state plus lambda times the maximally mixed state.
inline DensityMatrix white_noise_carriers(double lambda, Labels labels = {}) {
  require_unit_interval(lambda, "lambda");
  const double corr = (1 - lambda) / 2 + lambda / 4;
  return weighted_carriers(corr, corr, lambda / 4, lambda / 4, std::move(labels));
}

/// (|+..+> + |-..->)/sqrt 2, pure.
inline DensityMatrix ghz_pm(std::size_t n, Labels labels = {}) {
  require_qubits(n, 2, 10, "ghz_pm");
  if (labels.empty()) labels = numbered("C", n);
  auto v = repeated_ket(ket_plus(), n);
  const auto w = repeated_ket(ket_minus(), n);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = (v[i] + w[i]) * M_SQRT1_2;
  return DensityMatrix(PureState::normalized(std::move(labels), std::move(v)));
}

/// ((|+><+| + |-><-|)/2)^{(x) n} = I / 2^n
inline DensityMatrix uncorrelated_carriers(std::size_t n, Labels labels = {}) {
  require_qubits(n, 1, 10, "uncorrelated_carriers");
  if (labels.empty()) labels = numbered("C", n);
  return DensityMatrix::maximally_mixed(std::move(labels));
}

/// (|0..0><0..0| + |1..1><1..1|)/2, the computational-basis rewrite of the classical carriers.
inline DensityMatrix computational_carriers(std::size_t n, Labels labels = {}) {
  require_qubits(n, 1, 10, "computational_carriers");
  if (labels.empty()) labels = numbered("C", n);
  return mixture(std::move(labels), {{0.5, repeated_ket(ket0(), n)}, {0.5, repeated_ket(ket1(), n)}});
}

// ---- memories -----------------------------------------------------------

inline DensityMatrix plus_memories(std::size_t n, Labels labels = {}) {
  require_qubits(n, 1, 10, "plus_memories");
  if (labels.empty()) labels = numbered("M", n);
  return DensityMatrix(PureState(std::move(labels), repeated_ket(ket_plus(), n)));
}

inline DensityMatrix zero_memories(std::size_t n, Labels labels = {}) {
  require_qubits(n, 1, 10, "zero_memories");
  if (labels.empty()) labels = numbered("M", n);
  return DensityMatrix(PureState(std::move(labels), repeated_ket(ket0(), n)));
}

/// All memories |+> except memory `which` (1-based), prepared in the Bloch state (vartheta, varphi).
inline DensityMatrix bloch_memories(std::size_t n, double vartheta, double varphi, std::size_t which = 2,
                                    Labels labels = {}) {
  require_qubits(n, 1, 10, "bloch_memories");
  require_bloch_range(vartheta, varphi);
  if (which < 1 || which > n) throw ConfigError("bloch_memories: memory index out of range");
  if (labels.empty()) labels = numbered("M", n);
  std::vector<std::vector<cplx>> f(n, ket_plus());
  f[which - 1] = bloch_vector(vartheta, varphi);
  return DensityMatrix(PureState(std::move(labels), product_ket(f)));
}

/// (x)_j (A_j |+><+| + (1 - A_j) |-><-|)
inline DensityMatrix mixed_memories(const std::vector<double>& a, Labels labels = {}) {
  require_qubits(a.size(), 1, 10, "mixed_memories");
  if (labels.empty()) labels = numbered("M", a.size());
  CMatrix m = CMatrix::identity(1);
  for (double aj : a) {
    require_unit_interval(aj, "A_j");
    m = kron(m, CMatrix::projector(ket_plus()) * cplx(aj) + CMatrix::projector(ket_minus()) * cplx(1 - aj));
  }
  return DensityMatrix::normalized(std::move(labels), std::move(m));
}

// ---- benchmarks ---------------------------------------------------------

/// Symmetric single-excitation state on n qubits.
inline PureState w_ket(std::size_t n, Labels labels = {}) {
  require_qubits(n, 2, 10, "w_state");
  if (labels.empty()) labels = numbered("q", n);
  std::vector<cplx> v(std::size_t{1} << n);
  for (std::size_t k = 0; k < n; ++k) v[std::size_t{1} << k] = 1.0 / std::sqrt(static_cast<double>(n));
  return PureState(std::move(labels), std::move(v));
}
inline DensityMatrix w_state(std::size_t n, Labels labels = {}) { return DensityMatrix(w_ket(n, std::move(labels))); }

/// (1 - eps)|W_n><W_n| + eps I / 2^n
inline DensityMatrix werner_w(std::size_t n, double eps, Labels labels = {}) {
  require_unit_interval(eps, "epsilon");
  const auto w = w_state(n, std::move(labels));
  const std::size_t d = w.dim();
  CMatrix m = w.matrix() * cplx(1 - eps) + CMatrix::identity(d) * cplx(eps / static_cast<double>(d));
  return DensityMatrix::normalized(w.labels(), std::move(m));
}

/// (|0..0> + |1..1>)/sqrt 2
inline DensityMatrix ghz_computational(std::size_t n, Labels labels = {}) {
  require_qubits(n, 2, 10, "ghz");
  if (labels.empty()) labels = numbered("q", n);
  std::vector<cplx> v(std::size_t{1} << n);
  v.front() = M_SQRT1_2;
  v.back() = M_SQRT1_2;
  return DensityMatrix(PureState(std::move(labels), std::move(v)));
}

// Bell kets in the computational basis.
inline std::vector<cplx> phi_plus() { return {M_SQRT1_2, 0, 0, M_SQRT1_2}; }
inline std::vector<cplx> phi_minus() { return {M_SQRT1_2, 0, 0, -M_SQRT1_2}; }
inline std::vector<cplx> psi_plus() { return {0, M_SQRT1_2, M_SQRT1_2, 0}; }
inline std::vector<cplx> psi_minus() { return {0, M_SQRT1_2, -M_SQRT1_2, 0}; }

inline DensityMatrix bell_phi_plus(Labels labels = {"A", "B"}) {
  return DensityMatrix(PureState(std::move(labels), phi_plus()));
}

/// x |Psi+><Psi+| + (1 - x)/2 (|Phi+><Phi+| + |Phi-><Phi-|)
inline DensityMatrix tau(double x, Labels labels = {"M1", "M2"}) {
  require_unit_interval(x, "x");
  return mixture(std::move(labels), {{x, psi_plus()}, {(1 - x) / 2, phi_plus()}, {(1 - x) / 2, phi_minus()}});
}
inline DensityMatrix bell_mixture_half(Labels labels = {"M1", "M2"}) { return tau(0.5, std::move(labels)); }
inline DensityMatrix bell_mixture_third(Labels labels = {"M1", "M2"}) { return tau(1.0 / 3.0, std::move(labels)); }

/// y |Psi-><Psi-| + (1 - y)/4 I
inline DensityMatrix singlet_werner(double y, Labels labels = {"M1", "M2"}) {
  require_unit_interval(y, "y");
  CMatrix m = CMatrix::projector(psi_minus()) * cplx(y) + CMatrix::identity(4) * cplx((1 - y) / 4);
  return DensityMatrix::normalized(std::move(labels), std::move(m));
}

// ---- dispatcher ---------------------------------------------------------

using Params = std::map<std::string, double>;

inline double param(const Params& p, const std::string& key, double fallback) {
  auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}
inline double required_param(const Params& p, const std::string& key) {
  auto it = p.find(key);
  if (it == p.end()) throw ConfigError("missing state parameter '" + key + "'");
  return it->second;
}

/// Builds a state by family name. Qubit count comes from param "n" where relevant.
inline DensityMatrix make_named_state(std::string_view family, const Params& p, Labels labels = {}) {
  const auto n = static_cast<std::size_t>(param(p, "n", 2));
  if (family == "classical") return classical_carriers(n, labels);
  if (family == "lambda") return lambda_carriers(required_param(p, "lambda"), labels);
  if (family == "lambda_white") return white_noise_carriers(required_param(p, "lambda"), labels);
  if (family == "eta") return eta_carriers(required_param(p, "eta"), labels);
  if (family == "anticorrelated") return lambda_carriers(1.0, labels);
  if (family == "ghz_pm") return ghz_pm(n, labels);
  if (family == "uncorrelated") return uncorrelated_carriers(n, labels);
  if (family == "computational") return computational_carriers(n, labels);
  if (family == "plus") return plus_memories(n, labels);
  if (family == "zero") return zero_memories(n, labels);
  if (family == "bloch") {
    return bloch_memories(n, required_param(p, "vartheta"), param(p, "varphi", 0.0),
                          static_cast<std::size_t>(param(p, "which", 2)), labels);
  }
  if (family == "mixed") {
    std::vector<double> a;
    for (std::size_t j = 1; j <= n; ++j) a.push_back(param(p, "A" + std::to_string(j), 1.0));
    return mixed_memories(a, labels);
  }
  if (family == "maximally_mixed") return DensityMatrix::maximally_mixed(labels.empty() ? numbered("q", n) : labels);
  if (family == "w") return w_state(n, labels);
  if (family == "werner_w") return werner_w(n, required_param(p, "epsilon"), labels);
  if (family == "ghz") return ghz_computational(n, labels);
  if (family == "bell") return bell_phi_plus(labels.empty() ? Labels{"A", "B"} : labels);
  if (family == "tau") return tau(required_param(p, "x"), labels.empty() ? Labels{"M1", "M2"} : labels);
  if (family == "rho1") return bell_mixture_half(labels.empty() ? Labels{"M1", "M2"} : labels);
  if (family == "rho2") return bell_mixture_third(labels.empty() ? Labels{"M1", "M2"} : labels);
  if (family == "singlet_werner") {
    return singlet_werner(required_param(p, "y"), labels.empty() ? Labels{"M1", "M2"} : labels);
  }
  throw ConfigError("unknown state family '" + std::string(family) + "'");
}

}  // namespace discordnet::states
