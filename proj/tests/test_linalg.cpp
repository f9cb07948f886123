#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "discordnet/linalg.hpp"

using namespace discordnet;

namespace {

CMatrix random_hermitian(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  CMatrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = cplx(g(rng), g(rng));
  return (a + a.adjoint()) * cplx(0.5);
}

}  // namespace

TEST(Linalg, KronOfPaulisMatchesHandWrittenMatrix) {
  const CMatrix zx = kron(pauli::Z(), pauli::X());
  const CMatrix expect = {{0, 1, 0, 0}, {1, 0, 0, 0}, {0, 0, 0, -1}, {0, 0, -1, 0}};
  EXPECT_EQ(max_abs_diff(zx, expect), 0.0);
}

TEST(Linalg, HadamardIsSelfInverse) {
  EXPECT_LT(max_abs_diff(pauli::H() * pauli::H(), CMatrix::identity(2)), 1e-15);
}

TEST(Linalg, EigenReconstructionOnRandomHermitian) {
  std::mt19937_64 rng(7);
  for (std::size_t n : {1u, 2u, 3u, 4u, 8u, 16u, 32u}) {
    for (int rep = 0; rep < 5; ++rep) {
      const CMatrix h = random_hermitian(n, rng);
      const auto e = eigh(h);
      EXPECT_LT(max_abs_diff(e.reconstruct(), h), 1e-10) << "n=" << n;
      EXPECT_TRUE(std::is_sorted(e.eigenvalues.begin(), e.eigenvalues.end()));
      // eigenvectors orthonormal
      EXPECT_LT(max_abs_diff(e.eigenvectors.adjoint() * e.eigenvectors, CMatrix::identity(n)), 1e-10);
    }
  }
}

TEST(Linalg, EigenvaluesOfKnownMatrices) {
  const auto ev = eigvalsh(pauli::Y());
  ASSERT_EQ(ev.size(), 2u);
  EXPECT_NEAR(ev[0], -1.0, 1e-12);
  EXPECT_NEAR(ev[1], 1.0, 1e-12);
  const double d[] = {3.0, -2.0, 0.5};
  const auto diag = eigvalsh(CMatrix::diagonal(d));
  EXPECT_NEAR(diag[0], -2.0, 1e-14);
  EXPECT_NEAR(diag[2], 3.0, 1e-14);
}

TEST(Linalg, TraceOfEigenvaluesEqualsTrace) {
  std::mt19937_64 rng(11);
  const CMatrix h = random_hermitian(8, rng);
  double s = 0;
  for (double v : eigvalsh(h)) s += v;
  EXPECT_NEAR(s, h.trace().real(), 1e-11);
}

TEST(Linalg, NonHermitianInputRejected) {
  const CMatrix m = {{1, 2}, {0, 1}};
  EXPECT_THROW(eigh(m), ConfigError);
}

TEST(Linalg, NonFiniteInputRejected) {
  CMatrix m = CMatrix::identity(2);
  m(0, 0) = std::nan("");
  EXPECT_ANY_THROW(eigh(m));
}

TEST(Linalg, MatFnSquareRootSquaresBack) {
  std::mt19937_64 rng(3);
  CMatrix a = random_hermitian(4, rng);
  const CMatrix psd = a * a;
  const CMatrix r = mat_fn(psd, [](double x) { return std::sqrt(std::max(x, 0.0)); });
  EXPECT_LT(max_abs_diff(r * r, psd), 1e-9);
}

TEST(Linalg, ShannonBits) {
  const double fair[] = {0.5, 0.5};
  EXPECT_NEAR(shannon_bits(fair), 1.0, 1e-15);
  const double sure[] = {1.0, 0.0, 0.0};
  EXPECT_EQ(shannon_bits(sure), 0.0);
  const double quarter[] = {0.25, 0.25, 0.25, 0.25};
  EXPECT_NEAR(shannon_bits(quarter), 2.0, 1e-15);
}

TEST(Linalg, ShapeMismatchThrows) {
  EXPECT_THROW(matmul(CMatrix(2, 3), CMatrix(2, 3)), ConfigError);
  EXPECT_THROW(CMatrix(2, 2, std::vector<cplx>(3)), ConfigError);
}
