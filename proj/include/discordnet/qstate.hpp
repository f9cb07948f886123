#pragma once

// Labeled multi-qubit states. The joint matrix index is big-endian in the
// label list: the first label is the most significant bit.

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "discordnet/linalg.hpp"

namespace discordnet {

using Label = std::string;
using Labels = std::vector<Label>;

namespace tol {
inline constexpr double trace = 1e-10;
inline constexpr double positivity = 1e-9;
inline constexpr double pure_norm = 1e-12;
}  // namespace tol

/// Polar and azimuthal Bloch angles in radians.
struct BlochAngles {
  double theta = 0.0;
  double phi = 0.0;
};

namespace detail {

inline std::size_t label_index(const Labels& labels, const Label& l) {
  auto it = std::find(labels.begin(), labels.end(), l);
  if (it == labels.end()) throw ConfigError("unknown subsystem label '" + l + "'");
  return static_cast<std::size_t>(it - labels.begin());
}

inline void require_distinct(const Labels& labels) {
  for (std::size_t i = 0; i < labels.size(); ++i)
    for (std::size_t j = i + 1; j < labels.size(); ++j)
      if (labels[i] == labels[j]) throw ConfigError("duplicate subsystem label '" + labels[i] + "'");
}

// Bit of qubit `pos` (0 = first label) inside a basis index of an n-qubit register.
inline std::size_t bit_of(std::size_t pos, std::size_t n) { return std::size_t{1} << (n - 1 - pos); }

// Basis indices touched by a k-qubit operator on `positions`, for a fixed
// assignment `base` of all other qubits. Entry m uses m's bits in the order of
// `positions` (first position = most significant bit of m).
inline void scatter_indices(std::size_t base, std::span<const std::size_t> positions, std::size_t n,
                            std::vector<std::size_t>& idx) {
  const std::size_t k = positions.size();
  idx.assign(std::size_t{1} << k, base);
  for (std::size_t m = 0; m < idx.size(); ++m)
    for (std::size_t t = 0; t < k; ++t)
      if (m & (std::size_t{1} << (k - 1 - t))) idx[m] |= bit_of(positions[t], n);
}

inline std::vector<std::size_t> bases_excluding(std::span<const std::size_t> positions, std::size_t n) {
  std::size_t mask = 0;
  for (auto p : positions) mask |= bit_of(p, n);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < (std::size_t{1} << n); ++i)
    if ((i & mask) == 0) out.push_back(i);
  return out;
}

}  // namespace detail

/// rho -> K rho K^dagger with K acting on the qubits at `positions`.
inline CMatrix conjugate_local(const CMatrix& rho, const CMatrix& op, std::span<const std::size_t> positions) {
  const std::size_t dim = rho.rows();
  const std::size_t n = static_cast<std::size_t>(std::countr_zero(dim));
  const std::size_t d = std::size_t{1} << positions.size();
  if (op.rows() != d || op.cols() != d) throw ConfigError("conjugate_local: operator dimension mismatch");
  const auto bases = detail::bases_excluding(positions, n);
  std::vector<std::size_t> idx;
  std::vector<cplx> buf(d);
  CMatrix tmp = rho;
  // Left multiplication, column by column.
  for (std::size_t col = 0; col < dim; ++col) {
    for (auto b : bases) {
      detail::scatter_indices(b, positions, n, idx);
      for (std::size_t m = 0; m < d; ++m) {
        cplx s = 0;
        for (std::size_t mm = 0; mm < d; ++mm) s += op(m, mm) * rho(idx[mm], col);
        buf[m] = s;
      }
      for (std::size_t m = 0; m < d; ++m) tmp(idx[m], col) = buf[m];
    }
  }
  CMatrix out = tmp;
  // Right multiplication by K^dagger, row by row.
  for (std::size_t row = 0; row < dim; ++row) {
    for (auto b : bases) {
      detail::scatter_indices(b, positions, n, idx);
      for (std::size_t m = 0; m < d; ++m) {
        cplx s = 0;
        for (std::size_t mm = 0; mm < d; ++mm) s += tmp(row, idx[mm]) * std::conj(op(m, mm));
        buf[m] = s;
      }
      for (std::size_t m = 0; m < d; ++m) out(row, idx[m]) = buf[m];
    }
  }
  return out;
}

/// Pure state over labeled qubits.
class PureState {
 public:
  PureState(Labels labels, std::vector<cplx> amplitudes) : labels_(std::move(labels)), amps_(std::move(amplitudes)) {
    detail::require_distinct(labels_);
    if (amps_.size() != (std::size_t{1} << labels_.size())) throw ConfigError("PureState: dimension/label mismatch");
    double norm = 0;
    for (const auto& a : amps_) norm += std::norm(a);
    if (std::abs(std::sqrt(norm) - 1.0) > tol::pure_norm) {
      throw ConfigError("PureState: amplitudes not normalized (norm " + std::to_string(std::sqrt(norm)) + ")");
    }
  }
  /// Normalizes the amplitudes first.
  static PureState normalized(Labels labels, std::vector<cplx> amplitudes) {
    double norm = 0;
    for (const auto& a : amplitudes) norm += std::norm(a);
    if (norm <= 0) throw ConfigError("PureState: zero vector");
    for (auto& a : amplitudes) a /= std::sqrt(norm);
    return PureState(std::move(labels), std::move(amplitudes));
  }

  const Labels& labels() const noexcept { return labels_; }
  std::span<const cplx> amplitudes() const noexcept { return amps_; }
  std::size_t qubits() const noexcept { return labels_.size(); }

 private:
  Labels labels_;
  std::vector<cplx> amps_;
};

class DensityMatrix {
 public:
  /// Validates shape, unit trace and Hermiticity; positivity is checked by
  /// `min_eigenvalue()` / `is_valid()` on demand because it needs a diagonalization.
  DensityMatrix(Labels labels, CMatrix matrix) : labels_(std::move(labels)), m_(std::move(matrix)) {
    detail::require_distinct(labels_);
    if (!m_.square() || m_.rows() != (std::size_t{1} << labels_.size())) {
      throw ConfigError("DensityMatrix: matrix dimension does not match " + std::to_string(labels_.size()) +
                        " qubit labels");
    }
    if (!m_.all_finite()) throw ConfigError("DensityMatrix: non-finite entries");
    if (std::abs(m_.trace() - cplx(1.0)) > tol::trace) {
      throw ConfigError("DensityMatrix: trace " + std::to_string(m_.trace().real()) + " != 1");
    }
    if (!m_.is_hermitian()) throw ConfigError("DensityMatrix: not Hermitian");
  }

  explicit DensityMatrix(const PureState& psi)
      : DensityMatrix(psi.labels(), CMatrix::projector(psi.amplitudes())) {}

  /// Divides by the trace first; throws NumericalError when the trace is ~0.
  static DensityMatrix normalized(Labels labels, CMatrix matrix) {
    const double t = matrix.trace().real();
    if (!(t > tol::eigen_floor)) throw NumericalError("DensityMatrix: cannot normalize a zero-trace operator");
    matrix *= 1.0 / t;
    // Symmetrize away round-off so downstream Hermiticity checks stay tight.
    for (std::size_t r = 0; r < matrix.rows(); ++r)
      for (std::size_t c = r; c < matrix.cols(); ++c) {
        const cplx avg = 0.5 * (matrix(r, c) + std::conj(matrix(c, r)));
        matrix(r, c) = avg;
        matrix(c, r) = std::conj(avg);
      }
    return DensityMatrix(std::move(labels), std::move(matrix));
  }

  static DensityMatrix maximally_mixed(Labels labels) {
    const std::size_t d = std::size_t{1} << labels.size();
    return DensityMatrix(std::move(labels), CMatrix::identity(d) * cplx(1.0 / static_cast<double>(d)));
  }

  const Labels& labels() const noexcept { return labels_; }
  const CMatrix& matrix() const noexcept { return m_; }
  std::size_t qubits() const noexcept { return labels_.size(); }
  std::size_t dim() const noexcept { return m_.rows(); }
  std::size_t position(const Label& l) const { return detail::label_index(labels_, l); }
  bool has(const Label& l) const { return std::find(labels_.begin(), labels_.end(), l) != labels_.end(); }

  double min_eigenvalue() const { return eigvalsh(m_).front(); }
  bool is_valid() const { return min_eigenvalue() >= -tol::positivity; }

  DensityMatrix relabeled(Labels labels) const { return DensityMatrix(std::move(labels), m_); }

 private:
  Labels labels_;
  CMatrix m_;
};

/// cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>
inline std::vector<cplx> bloch_vector(double theta, double phi) {
  return {std::cos(theta / 2), std::polar(1.0, phi) * std::sin(theta / 2)};
}
/// The orthogonal partner: sin(theta/2)|0> - e^{i phi} cos(theta/2)|1>.
inline std::vector<cplx> bloch_vector_perp(double theta, double phi) {
  return {std::sin(theta / 2), -std::polar(1.0, phi) * std::cos(theta / 2)};
}

inline void require_bloch_range(double theta, double phi) {
  constexpr double pi = std::numbers::pi;
  if (!(theta >= 0.0 && theta <= pi) || !(phi >= 0.0 && phi < 2 * pi)) {
    throw ConfigError("Bloch angles out of range: theta in [0, pi], phi in [0, 2pi) required");
  }
}

inline PureState bloch_state(double theta, double phi, Label label = "q") {
  require_bloch_range(theta, phi);
  return PureState({std::move(label)}, bloch_vector(theta, phi));
}
inline PureState bloch_state_perp(double theta, double phi, Label label = "q") {
  require_bloch_range(theta, phi);
  return PureState({std::move(label)}, bloch_vector_perp(theta, phi));
}

/// Rows are <psi| and <psi_perp|; i.e. U^dagger for the measurement basis.
inline CMatrix basis_bra_matrix(double theta, double phi) {
  const auto v = bloch_vector(theta, phi);
  const auto w = bloch_vector_perp(theta, phi);
  return {{std::conj(v[0]), std::conj(v[1])}, {std::conj(w[0]), std::conj(w[1])}};
}

inline DensityMatrix tensor(const std::vector<DensityMatrix>& states) {
  if (states.empty()) throw ConfigError("tensor: empty state list");
  Labels labels;
  CMatrix m = CMatrix::identity(1);
  for (const auto& s : states) {
    labels.insert(labels.end(), s.labels().begin(), s.labels().end());
    m = kron(m, s.matrix());
  }
  detail::require_distinct(labels);  // surfaces label collisions as ConfigError
  return DensityMatrix::normalized(std::move(labels), std::move(m));
}

inline DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b) { return tensor({a, b}); }

/// Reduced operator on `keep` (kept in original order) of a raw matrix.
inline CMatrix partial_trace_matrix(const CMatrix& m, std::size_t n, std::span<const std::size_t> keep_positions) {
  std::vector<std::size_t> traced;
  for (std::size_t p = 0; p < n; ++p)
    if (std::find(keep_positions.begin(), keep_positions.end(), p) == keep_positions.end()) traced.push_back(p);
  const std::size_t dk = std::size_t{1} << keep_positions.size();
  const std::size_t dt = std::size_t{1} << traced.size();
  std::vector<std::size_t> keep_idx(dk), trace_idx(dt);
  for (std::size_t a = 0; a < dk; ++a) {
    std::size_t idx = 0;
    for (std::size_t t = 0; t < keep_positions.size(); ++t)
      if (a & (std::size_t{1} << (keep_positions.size() - 1 - t))) idx |= detail::bit_of(keep_positions[t], n);
    keep_idx[a] = idx;
  }
  for (std::size_t e = 0; e < dt; ++e) {
    std::size_t idx = 0;
    for (std::size_t t = 0; t < traced.size(); ++t)
      if (e & (std::size_t{1} << (traced.size() - 1 - t))) idx |= detail::bit_of(traced[t], n);
    trace_idx[e] = idx;
  }
  CMatrix out(dk, dk);
  for (std::size_t a = 0; a < dk; ++a)
    for (std::size_t b = 0; b < dk; ++b) {
      cplx s = 0;
      for (std::size_t e = 0; e < dt; ++e) s += m(keep_idx[a] | trace_idx[e], keep_idx[b] | trace_idx[e]);
      out(a, b) = s;
    }
  return out;
}

inline DensityMatrix partial_trace(const DensityMatrix& rho, const Labels& keep) {
  if (keep.empty()) throw ConfigError("partial_trace: keep set is empty");
  detail::require_distinct(keep);
  std::vector<std::size_t> positions;
  for (const auto& l : keep) positions.push_back(rho.position(l));
  std::sort(positions.begin(), positions.end());
  Labels ordered;
  for (auto p : positions) ordered.push_back(rho.labels()[p]);
  return DensityMatrix::normalized(std::move(ordered), partial_trace_matrix(rho.matrix(), rho.qubits(), positions));
}

/// Same state with the tensor factors permuted into `order`.
inline DensityMatrix reorder(const DensityMatrix& rho, const Labels& order) {
  if (order.size() != rho.qubits()) throw ConfigError("reorder: label count mismatch");
  const std::size_t n = rho.qubits();
  std::vector<std::size_t> src(n);
  for (std::size_t t = 0; t < n; ++t) src[t] = rho.position(order[t]);
  detail::require_distinct(order);
  const std::size_t d = rho.dim();
  std::vector<std::size_t> map(d);
  for (std::size_t a = 0; a < d; ++a) {
    std::size_t idx = 0;
    for (std::size_t t = 0; t < n; ++t)
      if (a & detail::bit_of(t, n)) idx |= detail::bit_of(src[t], n);
    map[a] = idx;
  }
  CMatrix out(d, d);
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b < d; ++b) out(a, b) = rho.matrix()(map[a], map[b]);
  return DensityMatrix(order, std::move(out));
}

inline double purity(const DensityMatrix& rho) {
  double s = 0;
  for (const auto& z : rho.matrix().data()) s += std::norm(z);  // tr(rho^2) = sum |rho_ij|^2 for Hermitian rho
  return s;
}

inline CMatrix psd_sqrt(const CMatrix& m) {
  return mat_fn(m, [](double x) { return x > 0 ? std::sqrt(x) : 0.0; });
}

/// Squared (Uhlmann-Jozsa) fidelity (tr sqrt(sqrt(rho) sigma sqrt(rho)))^2.
inline double fidelity(const CMatrix& rho, const CMatrix& sigma) {
  if (rho.rows() != sigma.rows() || rho.cols() != sigma.cols()) throw ConfigError("fidelity: dimension mismatch");
  const CMatrix sr = psd_sqrt(rho);
  CMatrix inner_m = sr * sigma * sr;
  // enforce exact Hermiticity before the second diagonalization
  inner_m = (inner_m + inner_m.adjoint()) * cplx(0.5);
  // eigenvalues at roundoff level would otherwise contribute ~sqrt(1e-16)
  double t = 0;
  for (double lam : eigvalsh(inner_m))
    if (lam > tol::fidelity_floor) t += std::sqrt(lam);
  return std::clamp(t * t, 0.0, 1.0);
}
inline double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma) {
  if (rho.dim() != sigma.dim()) throw ConfigError("fidelity: dimension mismatch");
  return fidelity(rho.matrix(), sigma.matrix());
}

/// <psi|rho|psi>; equals fidelity(rho, |psi><psi|) in the squared convention.
inline double fidelity_pure(const DensityMatrix& rho, const PureState& psi) {
  if (rho.dim() != psi.amplitudes().size()) throw ConfigError("fidelity_pure: dimension mismatch");
  return inner(psi.amplitudes(), matvec(rho.matrix(), psi.amplitudes())).real();
}

/// (1/2) ||a - b||_1
inline double trace_distance(const CMatrix& a, const CMatrix& b) {
  CMatrix d = a - b;
  d = (d + d.adjoint()) * cplx(0.5);
  double s = 0;
  for (double lam : eigvalsh(d)) s += std::abs(lam);
  return 0.5 * s;
}
inline double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
  if (a.dim() != b.dim()) throw ConfigError("trace_distance: dimension mismatch");
  return trace_distance(a.matrix(), b.matrix());
}

}  // namespace discordnet
