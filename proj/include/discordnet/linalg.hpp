#pragma once

// Dense complex matrices and the Hermitian eigensolver used by every entropy
// in the library. Dimensions stay small (at most 2^10 for full circuit
// states, at most 2^6 for anything that gets diagonalized).

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <complex>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace discordnet {

using cplx = std::complex<double>;

/// Thrown for inconsistent inputs: bad dimensions, unknown labels, parameters
/// outside their documented range.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a numerical procedure cannot produce a trustworthy answer
/// (eigensolver non-convergence, zero-probability post-selection, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace tol {
inline constexpr double hermitian = 1e-10;
inline constexpr double eigen_floor = 1e-12;
inline constexpr double fidelity_floor = 1e-13;
inline constexpr double jacobi_off = 1e-12;
inline constexpr int jacobi_max_sweeps = 100;
}  // namespace tol

class CMatrix {
 public:
  CMatrix() = default;
  CMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}
  CMatrix(std::size_t rows, std::size_t cols, std::vector<cplx> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw ConfigError("CMatrix: entry count " + std::to_string(data_.size()) + " != " +
                        std::to_string(rows_) + "x" + std::to_string(cols_));
    }
  }
  /// Row-major nested initializer, e.g. {{0, 1}, {1, 0}}.
  CMatrix(std::initializer_list<std::initializer_list<cplx>> rows) {
    rows_ = rows.size();
    cols_ = rows_ ? rows.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_) throw ConfigError("CMatrix: ragged initializer");
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  static CMatrix identity(std::size_t n) {
    CMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
  static CMatrix diagonal(std::span<const double> d) {
    CMatrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
  }
  /// |v><w|
  static CMatrix outer(std::span<const cplx> v, std::span<const cplx> w) {
    CMatrix m(v.size(), w.size());
    for (std::size_t i = 0; i < v.size(); ++i)
      for (std::size_t j = 0; j < w.size(); ++j) m(i, j) = v[i] * std::conj(w[j]);
    return m;
  }
  static CMatrix projector(std::span<const cplx> v) { return outer(v, v); }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool square() const noexcept { return rows_ == cols_; }

  cplx& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  const cplx& operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<cplx> data() noexcept { return data_; }
  std::span<const cplx> data() const noexcept { return data_; }

  CMatrix adjoint() const {
    CMatrix out(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c) out(c, r) = std::conj((*this)(r, c));
    return out;
  }

  cplx trace() const {
    cplx t = 0;
    for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) t += (*this)(i, i);
    return t;
  }

  double frobenius_norm() const {
    double s = 0;
    for (const auto& z : data_) s += std::norm(z);
    return std::sqrt(s);
  }

  /// max |H - H^dagger|, entrywise
  double hermiticity_defect() const {
    if (!square()) return std::numeric_limits<double>::infinity();
    double d = 0;
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = r; c < cols_; ++c)
        d = std::max(d, std::abs((*this)(r, c) - std::conj((*this)(c, r))));
    return d;
  }
  bool is_hermitian(double tolerance = tol::hermitian) const { return hermiticity_defect() <= tolerance; }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(),
                       [](const cplx& z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); });
  }

  CMatrix& operator+=(const CMatrix& o) {
    require_same_shape(o, "operator+=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  CMatrix& operator-=(const CMatrix& o) {
    require_same_shape(o, "operator-=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }
  CMatrix& operator*=(cplx s) {
    for (auto& z : data_) z *= s;
    return *this;
  }
  friend CMatrix operator+(CMatrix a, const CMatrix& b) { return a += b; }
  friend CMatrix operator-(CMatrix a, const CMatrix& b) { return a -= b; }
  friend CMatrix operator*(CMatrix a, cplx s) { return a *= s; }
  friend CMatrix operator*(cplx s, CMatrix a) { return a *= s; }

  /// Largest entrywise |a - b|.
  friend double max_abs_diff(const CMatrix& a, const CMatrix& b) {
    a.require_same_shape(b, "max_abs_diff");
    double d = 0;
    for (std::size_t i = 0; i < a.data_.size(); ++i) d = std::max(d, std::abs(a.data_[i] - b.data_[i]));
    return d;
  }

 private:
  void require_same_shape(const CMatrix& o, const char* what) const {
    if (rows_ != o.rows_ || cols_ != o.cols_) {
      throw ConfigError(std::string(what) + ": shape mismatch");
    }
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<cplx> data_;
};

inline CMatrix matmul(const CMatrix& a, const CMatrix& b) {
  if (a.cols() != b.rows()) {
    throw ConfigError("matmul: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " * " +
                      std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
  CMatrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const cplx aik = a(i, k);
      if (aik == cplx{}) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  }
  return out;
}

inline CMatrix operator*(const CMatrix& a, const CMatrix& b) { return matmul(a, b); }

inline CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (std::size_t ar = 0; ar < a.rows(); ++ar)
    for (std::size_t ac = 0; ac < a.cols(); ++ac) {
      const cplx s = a(ar, ac);
      if (s == cplx{}) continue;
      for (std::size_t br = 0; br < b.rows(); ++br)
        for (std::size_t bc = 0; bc < b.cols(); ++bc)
          out(ar * b.rows() + br, ac * b.cols() + bc) = s * b(br, bc);
    }
  return out;
}

inline std::vector<cplx> kron(std::span<const cplx> a, std::span<const cplx> b) {
  std::vector<cplx> out;
  out.reserve(a.size() * b.size());
  for (const auto& x : a)
    for (const auto& y : b) out.push_back(x * y);
  return out;
}

inline std::vector<cplx> matvec(const CMatrix& m, std::span<const cplx> v) {
  if (m.cols() != v.size()) throw ConfigError("matvec: dimension mismatch");
  std::vector<cplx> out(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out[i] += m(i, j) * v[j];
  return out;
}

/// <v|w>
inline cplx inner(std::span<const cplx> v, std::span<const cplx> w) {
  cplx s = 0;
  for (std::size_t i = 0; i < v.size(); ++i) s += std::conj(v[i]) * w[i];
  return s;
}

namespace pauli {
inline CMatrix I() { return {{1, 0}, {0, 1}}; }
inline CMatrix X() { return {{0, 1}, {1, 0}}; }
inline CMatrix Y() { return {{0, cplx(0, -1)}, {cplx(0, 1), 0}}; }
inline CMatrix Z() { return {{1, 0}, {0, -1}}; }
inline CMatrix H() {
  const double s = 1.0 / std::sqrt(2.0);
  return {{s, s}, {s, -s}};
}
}  // namespace pauli

struct EigenDecomposition {
  std::vector<double> eigenvalues;  // ascending
  CMatrix eigenvectors;             // columns

  CMatrix reconstruct() const {
    const std::size_t n = eigenvalues.size();
    CMatrix out(n, n);
    for (std::size_t k = 0; k < n; ++k) {
      const double lam = eigenvalues[k];
      for (std::size_t i = 0; i < n; ++i) {
        const cplx vi = eigenvectors(i, k) * lam;
        for (std::size_t j = 0; j < n; ++j) out(i, j) += vi * std::conj(eigenvectors(j, k));
      }
    }
    return out;
  }
};

namespace detail {

inline double off_diagonal_norm(const CMatrix& a) {
  double s = 0;
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c)
      if (r != c) s += std::norm(a(r, c));
  return std::sqrt(s);
}

// Cyclic complex Jacobi. `vectors` may be null when only eigenvalues are needed.
inline std::vector<double> jacobi(CMatrix a, CMatrix* vectors) {
  const std::size_t n = a.rows();
  if (vectors) *vectors = CMatrix::identity(n);
  const double scale = std::max(1.0, a.frobenius_norm());
  int sweep = 0;
  for (; sweep < tol::jacobi_max_sweeps; ++sweep) {
    if (off_diagonal_norm(a) < tol::jacobi_off * scale) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const cplx apq = a(p, q);
        const double r = std::abs(apq);
        if (r < 1e-300) continue;
        const cplx phase = apq / r;  // e^{i alpha}
        const double app = a(p, p).real();
        const double aqq = a(q, q).real();
        const double angle = 0.5 * std::atan2(2.0 * r, aqq - app);
        const double c = std::cos(angle);
        const double s = std::sin(angle);
        // Block rotation U = [[c, s], [-s e^{-i alpha}, c e^{-i alpha}]].
        const cplx u00 = c, u01 = s;
        const cplx u10 = -s * std::conj(phase), u11 = c * std::conj(phase);
        for (std::size_t k = 0; k < n; ++k) {  // A <- A U
          const cplx akp = a(k, p), akq = a(k, q);
          a(k, p) = akp * u00 + akq * u10;
          a(k, q) = akp * u01 + akq * u11;
        }
        for (std::size_t k = 0; k < n; ++k) {  // A <- U^dagger A
          const cplx apk = a(p, k), aqk = a(q, k);
          a(p, k) = std::conj(u00) * apk + std::conj(u10) * aqk;
          a(q, k) = std::conj(u01) * apk + std::conj(u11) * aqk;
        }
        a(p, q) = 0;
        a(q, p) = 0;
        a(p, p) = a(p, p).real();
        a(q, q) = a(q, q).real();
        if (vectors) {
          CMatrix& v = *vectors;
          for (std::size_t k = 0; k < n; ++k) {
            const cplx vkp = v(k, p), vkq = v(k, q);
            v(k, p) = vkp * u00 + vkq * u10;
            v(k, q) = vkp * u01 + vkq * u11;
          }
        }
      }
    }
  }
  if (sweep == tol::jacobi_max_sweeps && off_diagonal_norm(a) >= tol::jacobi_off * scale) {
    throw NumericalError("eigh: Jacobi iteration did not converge in " +
                         std::to_string(tol::jacobi_max_sweeps) + " sweeps");
  }
  std::vector<double> ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = a(i, i).real();
  return ev;
}

inline void require_hermitian(const CMatrix& h, const char* what) {
  if (!h.square()) throw ConfigError(std::string(what) + ": matrix is not square");
  if (!h.all_finite()) throw ConfigError(std::string(what) + ": non-finite entries");
  if (!h.is_hermitian()) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", h.hermiticity_defect());
    throw ConfigError(std::string(what) + ": input is not Hermitian (defect " + buf + ")");
  }
}

}  // namespace detail

inline EigenDecomposition eigh(const CMatrix& h) {
  detail::require_hermitian(h, "eigh");
  CMatrix vecs;
  std::vector<double> ev = detail::jacobi(h, &vecs);
  std::vector<std::size_t> order(ev.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return ev[x] < ev[y]; });
  EigenDecomposition out;
  out.eigenvalues.resize(ev.size());
  out.eigenvectors = CMatrix(ev.size(), ev.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    out.eigenvalues[k] = ev[order[k]];
    for (std::size_t i = 0; i < ev.size(); ++i) out.eigenvectors(i, k) = vecs(i, order[k]);
  }
  return out;
}

/// Eigenvalues only, ascending. Closed form for 2x2.
inline std::vector<double> eigvalsh(const CMatrix& h) {
  detail::require_hermitian(h, "eigvalsh");
  if (h.rows() == 1) return {h(0, 0).real()};
  if (h.rows() == 2) {
    const double a = h(0, 0).real(), d = h(1, 1).real();
    const double mean = 0.5 * (a + d);
    const double rad = std::hypot(0.5 * (a - d), std::abs(h(0, 1)));
    return {mean - rad, mean + rad};
  }
  std::vector<double> ev = detail::jacobi(h, nullptr);
  std::sort(ev.begin(), ev.end());
  return ev;
}

/// f applied to the spectrum of a Hermitian matrix. Eigenvalues with
/// |lambda| below the eigenvalue floor map to `zero_value` instead of f(lambda).
inline CMatrix mat_fn(const CMatrix& h, const std::function<double(double)>& f, double zero_value = 0.0) {
  EigenDecomposition e = eigh(h);
  for (double& lam : e.eigenvalues) lam = std::abs(lam) < tol::eigen_floor ? zero_value : f(lam);
  return e.reconstruct();
}

/// -sum lambda log2 lambda over a spectrum; eigenvalues under the floor contribute 0.
inline double shannon_bits(std::span<const double> probabilities) {
  double s = 0;
  for (double p : probabilities)
    if (p > tol::eigen_floor) s -= p * std::log2(p);
  return s;
}

}  // namespace discordnet
