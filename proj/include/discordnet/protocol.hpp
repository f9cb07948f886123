#pragma once

// The carrier/memory distribution protocol: carriers interact with their
// memories through controlled gates, are measured, and the post-selected
// state of the retained subsystems is returned.

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "discordnet/channels.hpp"
#include "discordnet/correlations.hpp"
#include "discordnet/qstate.hpp"
#include "discordnet/states.hpp"

namespace discordnet {

struct StateSpec {
  std::string family;
  states::Params params;
};

enum class Ordering {
  gates_then_measure,  // every gate first, then every carrier measurement
  interleaved,         // gate i immediately followed by the measurement of carrier i
};

struct ProtocolConfig {
  std::size_t n = 2;  // memories M1..Mn
  StateSpec carriers{"classical", {}};
  StateSpec memories{"plus", {}};
  std::optional<DensityMatrix> carrier_state;  // overrides `carriers` when set
  std::optional<DensityMatrix> memory_state;   // overrides `memories` when set
  /// 1-based indices i whose pair (C_i, M_i) gets the gate and carrier measurement; empty = all.
  std::vector<std::size_t> interactions;
  GateKind gate = GateKind::controlled_z;
  /// One (theta, phi) per interacting carrier, in ascending index order.
  std::vector<BlochAngles> carrier_basis;
  /// Outcome bit per measured carrier (0 = psi, 1 = psi_perp); empty = all zeros.
  std::vector<int> outcome;
  std::optional<KrausChannel> memory_noise;  // applied to the memories before any gate
  Ordering ordering = Ordering::gates_then_measure;
};

struct ProtocolOutcome {
  DensityMatrix final_state;
  double probability;
  Labels retained_labels;
  std::vector<int> outcome;
};

inline Label carrier_label(std::size_t i) { return "C" + std::to_string(i); }
inline Label memory_label(std::size_t i) { return "M" + std::to_string(i); }

/// Same angles on every one of n carriers.
inline std::vector<BlochAngles> uniform_basis(std::size_t n, double theta, double phi = 0.0) {
  return std::vector<BlochAngles>(n, BlochAngles{theta, phi});
}

namespace detail {

inline std::vector<std::size_t> interaction_set(const ProtocolConfig& cfg) {
  std::vector<std::size_t> s = cfg.interactions;
  if (s.empty())
    for (std::size_t i = 1; i <= cfg.n; ++i) s.push_back(i);
  std::sort(s.begin(), s.end());
  if (std::adjacent_find(s.begin(), s.end()) != s.end()) throw ConfigError("protocol: duplicate interaction index");
  for (auto i : s)
    if (i < 1 || i > cfg.n) throw ConfigError("protocol: interaction index " + std::to_string(i) + " has no memory");
  return s;
}

inline DensityMatrix carrier_state(const ProtocolConfig& cfg) {
  if (cfg.carrier_state) return *cfg.carrier_state;
  auto p = cfg.carriers.params;
  if (!p.count("n")) p["n"] = static_cast<double>(cfg.n);
  const auto rho = states::make_named_state(cfg.carriers.family, p);
  return rho.relabeled(states::numbered("C", rho.qubits()));
}

inline DensityMatrix memory_state(const ProtocolConfig& cfg) {
  if (cfg.memory_state) {
    if (cfg.memory_state->qubits() != cfg.n) throw ConfigError("protocol: memory state must have n qubits");
    return cfg.memory_state->relabeled(states::numbered("M", cfg.n));
  }
  auto p = cfg.memories.params;
  p["n"] = static_cast<double>(cfg.n);
  const auto rho = states::make_named_state(cfg.memories.family, p);
  return rho.relabeled(states::numbered("M", cfg.n));
}

// Controlled-Z on each (control, target) pair at once: CZ is diagonal, so entry
// (a, b) picks up (-1)^(number of pairs where exactly one of a, b has both bits set).
inline DensityMatrix apply_cz_layer(const DensityMatrix& rho, const std::vector<std::pair<Label, Label>>& pairs) {
  const std::size_t n = rho.qubits();
  std::vector<std::size_t> masks;
  for (const auto& [c, t] : pairs) {
    if (c == t) throw ConfigError("apply_gate: control and target coincide");
    masks.push_back(bit_of(rho.position(c), n) | bit_of(rho.position(t), n));
  }
  const std::size_t d = rho.dim();
  std::vector<unsigned> active(d, 0);  // bit k set when index a has both bits of pair k
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t k = 0; k < masks.size(); ++k)
      if ((a & masks[k]) == masks[k]) active[a] |= 1u << k;
  CMatrix m = rho.matrix();
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b < d; ++b)
      if (std::popcount(active[a] ^ active[b]) & 1) m(a, b) = -m(a, b);
  return DensityMatrix(rho.labels(), std::move(m));
}

inline DensityMatrix apply_pair_gates(const DensityMatrix& rho, GateKind kind, const std::vector<std::size_t>& indices) {
  std::vector<std::pair<Label, Label>> pairs;
  for (auto i : indices) pairs.emplace_back(carrier_label(i), memory_label(i));
  if (kind == GateKind::controlled_z) return apply_cz_layer(rho, pairs);
  if (kind == GateKind::local_unitary) throw ConfigError("protocol: pair gate must be controlled");
  DensityMatrix out = rho;
  for (const auto& [c, t] : pairs) out = apply_gate(out, GateSpec{kind, c, t, {}});
  return out;
}

}  // namespace detail

/// Runs the circuit for one outcome bit-string.
inline ProtocolOutcome run_circuit(const ProtocolConfig& cfg) {
  const auto inter = detail::interaction_set(cfg);
  if (cfg.carrier_basis.size() != inter.size()) {
    throw ConfigError("protocol: expected " + std::to_string(inter.size()) + " carrier basis angle pairs, got " +
                      std::to_string(cfg.carrier_basis.size()));
  }
  std::vector<int> outcome = cfg.outcome.empty() ? std::vector<int>(inter.size(), 0) : cfg.outcome;
  if (outcome.size() != inter.size()) throw ConfigError("protocol: one outcome bit per measured carrier");

  const DensityMatrix carriers = detail::carrier_state(cfg);
  if (carriers.qubits() < cfg.n) throw ConfigError("protocol: fewer carriers than memories");
  DensityMatrix memories = detail::memory_state(cfg);
  if (cfg.memory_noise) memories = apply_kraus(memories, *cfg.memory_noise);

  DensityMatrix joint = tensor(carriers, memories);
  double probability = 1.0;

  auto measure = [&](std::size_t k_begin, std::size_t k_end) {
    MeasurementBasis basis;
    std::vector<int> bits;
    for (std::size_t k = k_begin; k < k_end; ++k) {
      basis.angles.emplace_back(carrier_label(inter[k]), cfg.carrier_basis[k]);
      bits.push_back(outcome[k]);
    }
    auto r = measure_project(joint, basis, bits);
    probability *= r.probability;
    joint = std::move(r.state);
  };

  if (cfg.ordering == Ordering::gates_then_measure) {
    joint = detail::apply_pair_gates(joint, cfg.gate, inter);
    measure(0, inter.size());
  } else {
    for (std::size_t k = 0; k < inter.size(); ++k) {
      joint = detail::apply_pair_gates(joint, cfg.gate, {inter[k]});
      measure(k, k + 1);
    }
  }

  // Interacting index -> memory; otherwise the carrier is kept and its memory dropped.
  Labels retained;
  const std::set<std::size_t> inter_set(inter.begin(), inter.end());
  for (std::size_t i = 1; i <= carriers.qubits(); ++i)
    retained.push_back(inter_set.count(i) ? memory_label(i) : carrier_label(i));
  DensityMatrix reduced = reorder(partial_trace(joint, retained), retained);
  return {std::move(reduced), probability, retained, outcome};
}

/// Every outcome with nonzero probability, in lexicographic bit order.
inline std::vector<ProtocolOutcome> run_circuit_all(const ProtocolConfig& cfg) {
  const auto inter = detail::interaction_set(cfg);
  std::vector<ProtocolOutcome> out;
  for (const auto& bits : all_outcomes(inter.size())) {
    ProtocolConfig c = cfg;
    c.outcome = bits;
    try {
      out.push_back(run_circuit(c));
    } catch (const NumericalError&) {
      // zero-probability branch
    }
  }
  return out;
}

/// Standard N-party protocol: classical carriers, |+>^N memories, CZ on every pair.
inline ProtocolConfig standard_config(std::size_t n, std::vector<BlochAngles> basis) {
  ProtocolConfig cfg;
  cfg.n = n;
  cfg.carrier_basis = std::move(basis);
  return cfg;
}

/// Two-memory final state written out literally: a product of local {|+>,|->}
/// mixtures plus alpha (e^{i phi+}|++><--| + e^{i phi-}|+-><-+| + h.c.),
/// alpha = sin(theta1) sin(theta2) / 4.
inline DensityMatrix final_state_closed_form(double theta1, double theta2, double phi1, double phi2) {
  const double c1 = std::pow(std::cos(theta1 / 2), 2), s1 = std::pow(std::sin(theta1 / 2), 2);
  const double c2 = std::pow(std::cos(theta2 / 2), 2), s2 = std::pow(std::sin(theta2 / 2), 2);
  const double alpha = std::sin(theta1) * std::sin(theta2) / 4;
  // Index order in the {|+>,|->} product basis: ++, +-, -+, --.
  CMatrix pm(4, 4);
  pm(0, 0) = c1 * c2;
  pm(1, 1) = c1 * s2;
  pm(2, 2) = s1 * c2;
  pm(3, 3) = s1 * s2;
  pm(0, 3) = alpha * std::polar(1.0, phi1 + phi2);
  pm(3, 0) = std::conj(pm(0, 3));
  pm(1, 2) = alpha * std::polar(1.0, phi1 - phi2);
  pm(2, 1) = std::conj(pm(1, 2));
  const CMatrix hh = kron(pauli::H(), pauli::H());
  return DensityMatrix::normalized({"M1", "M2"}, hh * pm * hh);
}

// ---- variants -----------------------------------------------------------

/// Computational-basis rewrite with a controlled-Hadamard, only C2 interacting
/// with M2 and measured at (theta2, phi2); returns the state of C1 M2 for every outcome.
inline std::vector<ProtocolOutcome> run_b92_variant(double phi2, double theta2 = std::numbers::pi / 2) {
  ProtocolConfig cfg;
  cfg.n = 2;
  cfg.carriers = {"computational", {}};
  cfg.memories = {"zero", {}};
  cfg.interactions = {2};
  cfg.gate = GateKind::controlled_hadamard;
  cfg.carrier_basis = {{theta2, phi2}};
  return run_circuit_all(cfg);
}

/// Classical carriers, only the C2-M2 pair interacting; state of C1 M2.
inline ProtocolConfig single_memory_config(double theta2, double phi2 = 0.0) {
  ProtocolConfig cfg;
  cfg.n = 2;
  cfg.interactions = {2};
  cfg.carrier_basis = {{theta2, phi2}};
  return cfg;
}

/// Carriers in (|+++> + |--->)/sqrt 2, pairs 1 and 2 interacting, C3 retained.
inline ProtocolConfig ghz_config(const std::vector<BlochAngles>& basis) {
  ProtocolConfig cfg;
  cfg.n = 2;
  cfg.carriers = {"ghz_pm", {{"n", 3}}};
  cfg.interactions = {1, 2};
  cfg.carrier_basis = basis;
  return cfg;
}
inline ProtocolOutcome run_ghz_variant(const std::vector<BlochAngles>& basis) { return run_circuit(ghz_config(basis)); }

// ---- effective memory channel analysis ------------------------------------

using MemoryChannel = std::function<DensityMatrix(const DensityMatrix&)>;

/// The map (memory input) -> (post-selected retained state) at fixed carrier basis and outcome.
inline MemoryChannel effective_channel(ProtocolConfig cfg) {
  return [cfg](const DensityMatrix& memory_in) {
    ProtocolConfig c = cfg;
    c.memory_state = memory_in;
    return run_circuit(c).final_state;
  };
}

/// Product kets of |+>/|-> on n qubits, as density matrices.
inline std::vector<DensityMatrix> pm_product_inputs(std::size_t n) {
  std::vector<DensityMatrix> out;
  for (const auto& bits : all_outcomes(n)) {
    std::vector<std::vector<cplx>> f;
    for (int b : bits) f.push_back(b ? states::ket_minus() : states::ket_plus());
    out.emplace_back(PureState(states::numbered("M", n), states::product_ket(f)));
  }
  return out;
}

/// Largest off-diagonal magnitude in the {|+>,|->}^n product basis.
inline double pm_offdiagonal(const CMatrix& m) {
  const std::size_t n = static_cast<std::size_t>(std::countr_zero(m.rows()));
  CMatrix h = CMatrix::identity(1);
  for (std::size_t q = 0; q < n; ++q) h = kron(h, pauli::H());
  const CMatrix pm = h * m * h;
  double d = 0;
  for (std::size_t r = 0; r < pm.rows(); ++r)
    for (std::size_t c = 0; c < pm.cols(); ++c)
      if (r != c) d = std::max(d, std::abs(pm(r, c)));
  return d;
}

/// True iff every classical ({|+>,|->} product) input is mapped to an output
/// diagonal in that same basis.
inline bool classify_semiclassical(const MemoryChannel& channel, std::size_t memories = 2, double tolerance = 1e-9) {
  for (const auto& in : pm_product_inputs(memories)) {
    const auto out = channel(in);
    if (pm_offdiagonal(out.matrix()) > tolerance) return false;
  }
  return true;
}
inline bool classify_semiclassical(const ProtocolConfig& cfg, double tolerance = 1e-9) {
  return classify_semiclassical(effective_channel(cfg), cfg.n, tolerance);
}

/// True iff the maximally mixed memory input is returned unchanged.
inline bool classify_unital(const MemoryChannel& channel, std::size_t memories = 2, double tolerance = 1e-9) {
  const auto in = DensityMatrix::maximally_mixed(states::numbered("M", memories));
  const auto out = channel(in);
  return max_abs_diff(out.matrix(), in.matrix()) <= tolerance;
}
inline bool classify_unital(const ProtocolConfig& cfg, double tolerance = 1e-9) {
  return classify_unital(effective_channel(cfg), cfg.n, tolerance);
}

/// I/4 + (1/4) cos(phi1) cos(phi2) sin(theta1) sin(theta2) Z(x)Z: the output for a
/// maximally mixed two-memory input.
inline CMatrix unital_test_closed_form(double theta1, double theta2, double phi1, double phi2) {
  const double k = 0.25 * std::cos(phi1) * std::cos(phi2) * std::sin(theta1) * std::sin(theta2);
  return CMatrix::identity(4) * cplx(0.25) + kron(pauli::Z(), pauli::Z()) * cplx(k);
}

struct FactorizabilityReport {
  double trace_distance;
  DensityMatrix joint_output;
  DensityMatrix product_output;
};

/// Compares the joint memory output with the tensor product of the
/// single-memory channels driven by the carrier marginals.
inline FactorizabilityReport effective_channel_nonfactorizability_check(const ProtocolConfig& cfg) {
  const auto inter = detail::interaction_set(cfg);
  if (cfg.n != 2 || inter.size() != 2) throw ConfigError("nonfactorizability check needs two interacting pairs");
  const auto joint = run_circuit(cfg).final_state;
  const auto carriers = detail::carrier_state(cfg);
  const auto memories = detail::memory_state(cfg);
  std::vector<DensityMatrix> parts;
  for (std::size_t k = 0; k < 2; ++k) {
    const std::size_t i = inter[k];
    ProtocolConfig single;
    single.n = 1;
    single.carrier_state = partial_trace(carriers, {carrier_label(i)}).relabeled({"C1"});
    single.memory_state = partial_trace(memories, {memory_label(i)}).relabeled({"M1"});
    single.gate = cfg.gate;
    single.carrier_basis = {cfg.carrier_basis[k]};
    single.outcome = {cfg.outcome.empty() ? 0 : cfg.outcome[k]};
    parts.push_back(run_circuit(single).final_state.relabeled({memory_label(i)}));
  }
  auto product = tensor(parts);
  const double td = trace_distance(joint.matrix(), product.matrix());
  return {td, joint, std::move(product)};
}

}  // namespace discordnet
