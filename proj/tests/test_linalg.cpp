#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>
#include <unsupported/Eigen/Polynomials>

#include "tskit/linalg.hpp"

using namespace tskit;

namespace {

Matrix random_hessenberg(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Matrix h = Matrix::Zero(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i <= std::min(j + 1, n - 1); ++i) h(i, j) = dist(rng);
  return h;
}

// Characteristic polynomial coefficients (ascending powers, monic) by the
// Faddeev-LeVerrier recurrence in long double.
std::vector<long double> characteristic_polynomial(const Matrix& a) {
  const int n = static_cast<int>(a.rows());
  using LMat = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  const LMat al = a.cast<long double>();
  std::vector<long double> c(n + 1, 0.0L);
  c[n] = 1.0L;
  LMat m = LMat::Zero(n, n);
  for (int k = 1; k <= n; ++k) {
    m = al * m + c[n - k + 1] * LMat::Identity(n, n);
    c[n - k] = -(al * m).trace() / static_cast<long double>(k);
  }
  return c;
}

std::vector<Complex> polynomial_roots(const Matrix& a) {
  const auto c = characteristic_polynomial(a);
  Eigen::VectorXd coeffs(static_cast<Eigen::Index>(c.size()));
  for (std::size_t i = 0; i < c.size(); ++i) coeffs[static_cast<Eigen::Index>(i)] = static_cast<double>(c[i]);
  Eigen::PolynomialSolver<double, Eigen::Dynamic> solver(coeffs);
  std::vector<Complex> roots(solver.roots().begin(), solver.roots().end());
  return roots;
}

// Greedy nearest matching; returns the worst distance.
double match_distance(std::vector<Complex> a, std::vector<Complex> b) {
  if (a.size() != b.size()) return INFINITY;
  double worst = 0.0;
  for (const Complex& z : a) {
    auto it = std::min_element(b.begin(), b.end(),
                               [&](const Complex& x, const Complex& y) { return std::abs(x - z) < std::abs(y - z); });
    worst = std::max(worst, std::abs(*it - z));
    b.erase(it);
  }
  return worst;
}

}  // namespace

TEST(HessenbergEigenvalues, Scalar) {
  Matrix h(1, 1);
  h << 0.5;
  auto r = hessenberg_eigenvalues(h);
  ASSERT_EQ(r.values.size(), 1u);
  EXPECT_EQ(r.values[0], Complex(0.5, 0.0));
  EXPECT_TRUE(r.converged);
}

TEST(HessenbergEigenvalues, RotationGivesConjugatePair) {
  Matrix h(2, 2);
  h << 0.0, -1.0, 1.0, 0.0;
  auto r = hessenberg_eigenvalues(h);
  ASSERT_EQ(r.values.size(), 2u);
  EXPECT_NEAR(std::abs(r.values[0] - Complex(0.0, 1.0)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(r.values[1] - Complex(0.0, -1.0)), 0.0, 1e-15);
}

TEST(HessenbergEigenvalues, EmptyMatrixRejected) {
  EXPECT_THROW(hessenberg_eigenvalues(Matrix(0, 0)), InvalidArgument);
}

TEST(HessenbergEigenvalues, RejectsNonHessenberg) {
  Matrix a = Matrix::Ones(3, 3);
  EXPECT_THROW(hessenberg_eigenvalues(a), InvalidArgument);
}

TEST(HessenbergEigenvalues, RandomEightByEightMatchesCharacteristicRoots) {
  const Matrix h = random_hessenberg(8, 20240611);
  auto r = hessenberg_eigenvalues(h);
  ASSERT_TRUE(r.converged);
  EXPECT_LE(match_distance(r.values, polynomial_roots(h)), 1e-8);
}

TEST(HessenbergEigenvalues, RandomSweepAgainstEigenSolver) {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    const int n = 2 + static_cast<int>(seed % 15);
    const Matrix h = random_hessenberg(n, seed);
    auto r = hessenberg_eigenvalues(h);
    ASSERT_TRUE(r.converged) << "seed " << seed;
    Eigen::EigenSolver<Matrix> es(h, false);
    std::vector<Complex> ref(es.eigenvalues().begin(), es.eigenvalues().end());
    EXPECT_LE(match_distance(r.values, ref), 1e-9) << "seed " << seed;
  }
}

TEST(HessenbergEigenvalues, ConjugatePairsAreExactMirrors) {
  for (std::uint64_t seed = 100; seed < 120; ++seed) {
    auto r = hessenberg_eigenvalues(random_hessenberg(10, seed));
    std::size_t complex_count = 0;
    for (const Complex& z : r.values) {
      if (z.imag() == 0.0) continue;
      ++complex_count;
      const bool mirrored = std::any_of(r.values.begin(), r.values.end(),
                                        [&](const Complex& w) { return w == std::conj(z); });
      EXPECT_TRUE(mirrored);
    }
    EXPECT_EQ(complex_count % 2, 0u);
  }
}

TEST(HessenbergEigenvalues, SortedByModulusThenImaginary) {
  auto r = hessenberg_eigenvalues(random_hessenberg(12, 9));
  for (std::size_t i = 1; i < r.values.size(); ++i) {
    const double a = std::abs(r.values[i - 1]);
    const double b = std::abs(r.values[i]);
    EXPECT_GE(a + 1e-14, b);
  }
}

TEST(DenseEigenvalues, GeneralMatrix) {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> g;
  Matrix a(9, 9);
  for (auto& x : a.reshaped()) x = g(rng);
  auto r = dense_eigenvalues(a);
  Eigen::EigenSolver<Matrix> es(a, false);
  std::vector<Complex> ref(es.eigenvalues().begin(), es.eigenvalues().end());
  EXPECT_LE(match_distance(r.values, ref), 1e-9);
}

TEST(DenseEigenvalues, RejectsNonSquare) { EXPECT_THROW(dense_eigenvalues(Matrix::Zero(2, 3)), InvalidArgument); }

TEST(IsUpperHessenberg, Detects) {
  EXPECT_TRUE(is_upper_hessenberg(random_hessenberg(5, 1)));
  Matrix a = random_hessenberg(5, 1);
  a(4, 0) = 1e-3;
  EXPECT_FALSE(is_upper_hessenberg(a));
  EXPECT_TRUE(is_upper_hessenberg(a, 1e-2));
}

TEST(Orthogonalization, AppendKeepsBasisOrthonormal) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  Matrix basis(30, 0);
  for (int round = 0; round < 10; ++round) {
    Matrix extra(30, 2);
    for (auto& x : extra.reshaped()) x = g(rng);
    append_orthonormal(basis, extra);
    EXPECT_LE(orthonormality_error(basis), 1e-12);
  }
  EXPECT_EQ(basis.cols(), 20);
}

TEST(Orthogonalization, DependentColumnDropped) {
  Matrix basis = Matrix::Identity(4, 2);
  Matrix extra(4, 1);
  extra << 1.0, 2.0, 0.0, 0.0;
  EXPECT_EQ(append_orthonormal(basis, extra), 0);
  EXPECT_EQ(basis.cols(), 2);
}

TEST(Orthogonalization, ReturnsResidualNorm) {
  Matrix basis = Matrix::Identity(3, 1);
  StateVector v(3);
  v << 5.0, 3.0, 4.0;
  const double r = orthogonalize_against(basis, v);
  EXPECT_NEAR(r, 5.0, 1e-14);
  EXPECT_NEAR(v[0], 0.0, 1e-15);
  EXPECT_NEAR(v.norm(), 1.0, 1e-15);
}
