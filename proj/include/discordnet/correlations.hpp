#pragma once

// Entropic correlation quantifiers: von Neumann entropy, mutual information,
// one-way discord with a projective measurement on a single qubit, relative
// entropy, and global quantum discord with its minimization over local bases.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "discordnet/channels.hpp"
#include "discordnet/qstate.hpp"
#include "discordnet/search.hpp"

namespace discordnet {

namespace tol {
inline constexpr double negative_clamp = 1e-9;
}

inline double entropy(const CMatrix& m) { return shannon_bits(eigvalsh(m)); }
inline double entropy(const DensityMatrix& rho) { return entropy(rho.matrix()); }

inline double mutual_information(const DensityMatrix& rho, const Labels& a, const Labels& b) {
  if (a.empty() || b.empty()) throw ConfigError("mutual_information: both parts must be nonempty");
  Labels both = a;
  both.insert(both.end(), b.begin(), b.end());
  detail::require_distinct(both);
  const auto ab = partial_trace(rho, both);
  return entropy(partial_trace(ab, a)) + entropy(partial_trace(ab, b)) - entropy(ab);
}

/// S(rho || sigma) in bits; +infinity when rho has weight outside the support of sigma.
inline double relative_entropy(const CMatrix& rho, const CMatrix& sigma) {
  if (rho.rows() != sigma.rows()) throw ConfigError("relative_entropy: dimension mismatch");
  const auto es = eigh(sigma);
  double cross = 0;  // tr rho log2 sigma
  for (std::size_t k = 0; k < es.eigenvalues.size(); ++k) {
    std::vector<cplx> v(es.eigenvalues.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = es.eigenvectors(i, k);
    const double w = inner(v, matvec(rho, v)).real();
    if (es.eigenvalues[k] <= tol::eigen_floor) {
      if (w > 1e-10) return std::numeric_limits<double>::infinity();
      continue;
    }
    cross += w * std::log2(es.eigenvalues[k]);
  }
  return std::max(0.0, -entropy(rho) - cross);
}
inline double relative_entropy(const DensityMatrix& rho, const DensityMatrix& sigma) {
  return relative_entropy(rho.matrix(), sigma.matrix());
}

/// Outcome of a discord minimization.
struct DiscordResult {
  double value = 0.0;
  MeasurementBasis argmin_basis;
  std::size_t evaluations = 0;
  bool converged = false;
};

/// Budget of the inner basis minimizations.
struct InnerBudget {
  std::size_t grid = 25;        // points per angle, up to two measured qubits
  std::size_t grid_large = 9;   // per-angle resolution of the unrestricted stage, three or more qubits
  std::size_t random_samples = 1500;  // unrestricted cloud, three or more qubits
  std::size_t multistarts = 5;
  double tolerance = 1e-7;
  std::size_t max_evaluations = 6000;
  std::uint64_t seed = 20240601;  // random cloud of the unrestricted stage

  static InnerBudget full() { return {}; }
  static InnerBudget fast() { return {13, 7, 300, 3, 1e-6, 2500}; }
};

/// (theta, phi) folded into theta in [0, pi], phi in [0, 2 pi).
inline BlochAngles canonical_angles(double theta, double phi) {
  constexpr double two_pi = 2 * std::numbers::pi;
  theta = std::fmod(theta, two_pi);
  if (theta < 0) theta += two_pi;
  if (theta > std::numbers::pi) {
    theta = two_pi - theta;
    phi += std::numbers::pi;
  }
  phi = std::fmod(phi, two_pi);
  if (phi < 0) phi += two_pi;
  if (phi >= two_pi) phi = 0;
  return {theta, phi};
}

inline double clamp_negative(double v) { return (v < 0 && v > -tol::negative_clamp) ? 0.0 : v; }

namespace detail {

// rho -> B rho B^dagger with the 2x2 B on qubit `pos`, in place.
inline void transform_qubit(CMatrix& m, const cplx b[2][2], std::size_t pos, std::size_t n) {
  const std::size_t d = m.rows();
  const std::size_t bit = bit_of(pos, n);
  for (std::size_t c = 0; c < d; ++c)
    for (std::size_t r = 0; r < d; ++r) {
      if (r & bit) continue;
      const cplx x0 = m(r, c), x1 = m(r | bit, c);
      m(r, c) = b[0][0] * x0 + b[0][1] * x1;
      m(r | bit, c) = b[1][0] * x0 + b[1][1] * x1;
    }
  for (std::size_t r = 0; r < d; ++r)
    for (std::size_t c = 0; c < d; ++c) {
      if (c & bit) continue;
      const cplx x0 = m(r, c), x1 = m(r, c | bit);
      m(r, c) = x0 * std::conj(b[0][0]) + x1 * std::conj(b[0][1]);
      m(r, c | bit) = x0 * std::conj(b[1][0]) + x1 * std::conj(b[1][1]);
    }
}

inline void basis_bras(double theta, double phi, cplx b[2][2]) {
  const double c = std::cos(theta / 2), s = std::sin(theta / 2);
  const cplx e = std::polar(1.0, -phi);
  b[0][0] = c, b[0][1] = e * s;    // <psi|
  b[1][0] = s, b[1][1] = -e * c;   // <psi_perp|
}

// Outcome distribution of measuring every qubit in its (theta, phi) basis,
// written into `p`; `scratch` is reused across calls.
inline void product_basis_distribution(const CMatrix& rho, std::span<const double> angles, CMatrix& scratch,
                                       std::vector<double>& p) {
  const std::size_t n = angles.size() / 2;
  scratch = rho;
  cplx b[2][2];
  for (std::size_t q = 0; q < n; ++q) {
    basis_bras(angles[2 * q], angles[2 * q + 1], b);
    transform_qubit(scratch, b, q, n);
  }
  p.resize(scratch.rows());
  for (std::size_t k = 0; k < p.size(); ++k) p[k] = std::max(0.0, scratch(k, k).real());
}

inline std::vector<double> product_basis_distribution(const CMatrix& rho, std::span<const double> angles) {
  CMatrix scratch;
  std::vector<double> p;
  product_basis_distribution(rho, angles, scratch, p);
  return p;
}

inline MeasurementBasis basis_from_angles(const Labels& labels, std::span<const double> angles) {
  MeasurementBasis b;
  for (std::size_t q = 0; q < labels.size(); ++q)
    b.angles.emplace_back(labels[q], canonical_angles(angles[2 * q], angles[2 * q + 1]));
  return b;
}

// Angles of the eigenbasis of a single-qubit state (its Bloch axis).
inline BlochAngles bloch_axis_angles(const CMatrix& rho1) {
  const double x = 2 * rho1(0, 1).real();
  const double y = -2 * rho1(0, 1).imag();
  const double z = (rho1(0, 0) - rho1(1, 1)).real();
  const double r = std::sqrt(x * x + y * y + z * z);
  if (r < 1e-12) return {0.0, 0.0};
  return canonical_angles(std::acos(std::clamp(z / r, -1.0, 1.0)), std::atan2(y, x));
}

}  // namespace detail

/// Precomputes the basis-independent parts of the global discord of one state.
class GlobalDiscord {
 public:
  explicit GlobalDiscord(const DensityMatrix& rho) : rho_(rho.matrix()), labels_(rho.labels()) {
    const std::size_t n = labels_.size();
    if (n < 1) throw ConfigError("GlobalDiscord: empty state");
    const double s_joint = entropy(rho_);
    double s_local = 0;
    for (std::size_t q = 0; q < n; ++q) {
      const std::size_t pos[] = {q};
      marginals_.push_back(partial_trace_matrix(rho_, n, pos));
      s_local += entropy(marginals_.back());
    }
    offset_ = s_local - s_joint;
  }

  std::size_t qubits() const noexcept { return labels_.size(); }
  const Labels& labels() const noexcept { return labels_; }
  const CMatrix& marginal(std::size_t q) const { return marginals_.at(q); }

  /// [S(Phi(rho)) - S(rho)] - sum_j [S(Phi_j(rho_j)) - S(rho_j)] at angles
  /// (theta_1, phi_1, theta_2, phi_2, ...). Marginal pinchings are the
  /// marginals of the joint outcome distribution.
  double operator()(std::span<const double> angles) const {
    const std::size_t n = labels_.size();
    if (angles.size() != 2 * n) throw ConfigError("gqd: expected one (theta, phi) pair per subsystem");
    thread_local CMatrix scratch;
    thread_local std::vector<double> p;
    detail::product_basis_distribution(rho_, angles, scratch, p);
    double h_local = 0;
    for (std::size_t q = 0; q < n; ++q) {
      const std::size_t bit = detail::bit_of(q, n);
      double p0 = 0;
      for (std::size_t k = 0; k < p.size(); ++k)
        if (!(k & bit)) p0 += p[k];
      const double pp[2] = {p0, std::max(0.0, 1.0 - p0)};
      h_local += shannon_bits(pp);
    }
    return shannon_bits(p) - h_local + offset_;
  }

 private:
  CMatrix rho_;
  Labels labels_;
  std::vector<CMatrix> marginals_;
  double offset_ = 0;  // sum_j S(rho_j) - S(rho)
};

inline std::vector<double> flatten_basis(const DensityMatrix& rho, const MeasurementBasis& bases) {
  if (bases.angles.size() != rho.qubits()) throw ConfigError("gqd: basis count does not match subsystem count");
  std::vector<double> angles(2 * rho.qubits());
  for (const auto& [label, a] : bases.angles) {
    const std::size_t q = rho.position(label);
    angles[2 * q] = a.theta;
    angles[2 * q + 1] = a.phi;
  }
  return angles;
}

/// Global discord objective at fixed local bases, via the pinching identity
/// S(rho || Phi(rho)) = S(Phi(rho)) - S(rho).
inline double gqd(const DensityMatrix& rho, const MeasurementBasis& bases) {
  bases.validate();
  return clamp_negative(GlobalDiscord(rho)(flatten_basis(rho, bases)));
}

/// Dephases `rho` in the product basis given by per-qubit angles.
inline CMatrix pinch(const CMatrix& rho, std::span<const double> angles) {
  const std::size_t n = angles.size() / 2;
  CMatrix u = CMatrix::identity(1);  // columns: product basis kets
  for (std::size_t q = 0; q < n; ++q) {
    const auto v = bloch_vector(angles[2 * q], angles[2 * q + 1]);
    const auto w = bloch_vector_perp(angles[2 * q], angles[2 * q + 1]);
    u = kron(u, CMatrix{{v[0], w[0]}, {v[1], w[1]}});
  }
  const CMatrix in_basis = u.adjoint() * rho * u;
  CMatrix diag(rho.rows(), rho.cols());
  for (std::size_t k = 0; k < rho.rows(); ++k) diag(k, k) = in_basis(k, k).real();
  return u * diag * u.adjoint();
}

/// Same objective as gqd() but through explicit relative entropies.
inline double gqd_direct(const DensityMatrix& rho, const MeasurementBasis& bases) {
  bases.validate();
  const auto angles = flatten_basis(rho, bases);
  const std::size_t n = rho.qubits();
  double g = relative_entropy(rho.matrix(), pinch(rho.matrix(), angles));
  for (std::size_t q = 0; q < n; ++q) {
    const std::size_t pos[] = {q};
    const CMatrix m = partial_trace_matrix(rho.matrix(), n, pos);
    g -= relative_entropy(m, pinch(m, std::span<const double>(angles).subspan(2 * q, 2)));
  }
  return clamp_negative(g);
}

namespace detail {

inline SearchSpec angle_search_spec(std::size_t qubits, std::size_t grid, const InnerBudget& budget) {
  SearchSpec s;
  s.dimension = 2 * qubits;
  for (std::size_t q = 0; q < qubits; ++q) {
    // The pinching depends only on the measurement axis, so the grid covers a hemisphere.
    s.lower.insert(s.lower.end(), {0.0, 0.0});
    s.upper.insert(s.upper.end(), {std::numbers::pi / 2, 2 * std::numbers::pi});
  }
  s.grid_points = grid;
  s.multistarts = budget.multistarts;
  s.tolerance = budget.tolerance;
  s.max_evaluations = budget.max_evaluations;
  s.random_samples = budget.random_samples;
  s.seed = budget.seed;
  s.clamp = false;  // the objective is periodic in every angle
  return s;
}

inline std::vector<double> repeat_angles(const BlochAngles& a, std::size_t n) {
  std::vector<double> x;
  for (std::size_t q = 0; q < n; ++q) x.insert(x.end(), {a.theta, a.phi});
  return x;
}

}  // namespace detail

/// Minimizes the global discord over all local rank-1 projective bases.
inline DiscordResult gqd_min(const DensityMatrix& rho, const InnerBudget& budget = InnerBudget::full()) {
  const GlobalDiscord g(rho);
  const std::size_t n = rho.qubits();
  auto objective = [&](const std::vector<double>& x) { return g(x); };

  // Heuristic warm starts: computational, X and Y bases everywhere, and the marginal eigenbases.
  std::vector<std::vector<double>> warm = {detail::repeat_angles({0.0, 0.0}, n),
                                           detail::repeat_angles({std::numbers::pi / 2, 0.0}, n),
                                           detail::repeat_angles({std::numbers::pi / 2, std::numbers::pi / 2}, n)};
  {
    std::vector<double> eig;
    for (std::size_t q = 0; q < n; ++q) {
      const auto a = detail::bloch_axis_angles(g.marginal(q));
      eig.insert(eig.end(), {a.theta, a.phi});
    }
    warm.push_back(std::move(eig));
  }

  SearchResult best;
  best.value = std::numeric_limits<double>::infinity();
  std::size_t evaluations = 0;
  bool converged = false;
  auto absorb = [&](const SearchResult& r) {
    evaluations += r.evaluations;
    converged = converged || r.converged;
    if (r.value < best.value) best = r;
  };

  if (n <= 2) {
    auto spec = detail::angle_search_spec(n, budget.grid, budget);
    spec.extra_starts = warm;
    absorb(optimize(objective, spec));
  } else {
    // Symmetric stage: identical bases on every party.
    auto sym = detail::angle_search_spec(n, budget.grid, budget);
    std::vector<std::size_t> thetas, phis;
    for (std::size_t q = 0; q < n; ++q) {
      thetas.push_back(2 * q);
      phis.push_back(2 * q + 1);
    }
    sym.tie_groups = {thetas, phis};
    sym.extra_starts = {warm[0], warm[1], warm[2]};
    const auto sym_result = optimize(objective, sym);
    absorb(sym_result);
    // Unrestricted stage, warm-started from the symmetric optimum.
    auto full = detail::angle_search_spec(n, budget.grid_large, budget);
    full.max_grid = 0;  // a tensor grid over 2n angles is out of reach; always sample
    full.extra_starts = warm;
    full.extra_starts.push_back(sym_result.argopt);
    absorb(optimize(objective, full));
  }

  DiscordResult out;
  out.value = clamp_negative(best.value);
  out.argmin_basis = detail::basis_from_angles(rho.labels(), best.argopt);
  out.evaluations = evaluations;
  out.converged = converged;
  return out;
}

/// One-way discord D_{A|B} with a rank-1 projective measurement on the single qubit B.
class OneWayDiscord {
 public:
  OneWayDiscord(const DensityMatrix& rho, const Label& measured, Labels unmeasured) : measured_(measured) {
    if (unmeasured.empty()) {
      for (const auto& l : rho.labels())
        if (l != measured) unmeasured.push_back(l);
    }
    if (!rho.has(measured)) throw ConfigError("discord: unknown measured label '" + measured + "'");
    if (std::find(unmeasured.begin(), unmeasured.end(), measured) != unmeasured.end()) {
      throw ConfigError("discord: measured label also listed as unmeasured");
    }
    if (unmeasured.empty()) throw ConfigError("discord: needs at least one unmeasured subsystem");
    Labels order = unmeasured;
    order.push_back(measured);
    const auto reduced = partial_trace(rho, order);
    ab_ = reorder(reduced, order).matrix();
    a_dim_ = ab_.rows() / 2;
    const std::size_t n = order.size();
    const std::size_t bpos[] = {n - 1};
    offset_ = entropy(partial_trace_matrix(ab_, n, bpos)) - entropy(ab_);
  }

  /// sum_j p_j S(rho_{A|j}) for the measurement basis (theta, phi) on B.
  double conditional_entropy(double theta, double phi) const {
    const auto v = bloch_vector(theta, phi);
    const auto w = bloch_vector_perp(theta, phi);
    return branch(v) + branch(w);
  }
  double value_at(double theta, double phi) const { return offset_ + conditional_entropy(theta, phi); }
  double offset() const noexcept { return offset_; }

 private:
  double branch(const std::vector<cplx>& v) const {
    // Unnormalized conditional state <v|_B rho |v>_B; B is the least significant qubit.
    CMatrix m(a_dim_, a_dim_);
    for (std::size_t a = 0; a < a_dim_; ++a)
      for (std::size_t b = 0; b < a_dim_; ++b) {
        cplx s = 0;
        for (std::size_t x = 0; x < 2; ++x)
          for (std::size_t y = 0; y < 2; ++y) s += std::conj(v[x]) * ab_(2 * a + x, 2 * b + y) * v[y];
        m(a, b) = s;
      }
    for (std::size_t a = 0; a < a_dim_; ++a) {
      m(a, a) = m(a, a).real();  // roundoff imaginary parts blow up after dividing by a small p
      for (std::size_t b = a + 1; b < a_dim_; ++b) m(b, a) = std::conj(m(a, b));
    }
    const double p = m.trace().real();
    if (p <= tol::eigen_floor) return 0.0;
    m *= 1.0 / p;
    return p * entropy(m);
  }

  Label measured_;
  CMatrix ab_;
  std::size_t a_dim_ = 0;
  double offset_ = 0;
};

/// D_{A|B} = S(rho_B) - S(rho_AB) + min over projective measurements on B of
/// sum_j p_j S(rho_{A|j}). `unmeasured` defaults to every other label.
inline DiscordResult discord_asym(const DensityMatrix& rho, const Label& measured, Labels unmeasured = {},
                                  const InnerBudget& budget = InnerBudget::full()) {
  const OneWayDiscord d(rho, measured, std::move(unmeasured));
  auto objective = [&](const std::vector<double>& x) { return d.value_at(x[0], x[1]); };
  auto spec = detail::angle_search_spec(1, budget.grid, budget);
  spec.extra_starts = {{0.0, 0.0}, {std::numbers::pi / 2, 0.0}, {std::numbers::pi / 2, std::numbers::pi / 2}};
  const auto r = optimize(objective, spec);
  DiscordResult out;
  out.value = clamp_negative(r.value);
  out.argmin_basis.angles.emplace_back(measured, canonical_angles(r.argopt[0], r.argopt[1]));
  out.evaluations = r.evaluations;
  out.converged = r.converged;
  return out;
}

}  // namespace discordnet
