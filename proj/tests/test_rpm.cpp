#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "tskit/models.hpp"
#include "tskit/rpm.hpp"

using namespace tskit;

namespace {

StateVector vec(std::initializer_list<double> xs) {
  StateVector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

// Successive Picard differences u_{n+1} - u_n for the first `count` steps.
std::vector<StateVector> picard_differences(const Timestepper& m, StateVector u, int count) {
  std::vector<StateVector> d;
  for (int i = 0; i < count; ++i) {
    StateVector next = m.evaluate(u, {});
    d.push_back(next - u);
    u = std::move(next);
  }
  return d;
}

FunctionTimestepper scalar_affine(double mu, double ustar) {
  return FunctionTimestepper(1, [mu, ustar](const StateVector& u, const Parameters&) {
    return StateVector((mu * (u.array() - ustar) + ustar).matrix());
  });
}

// Slow eigenvalues {0.99, 0.98, 0.95} and 20 fast ones in [-0.3, 0.3].
LinearMapModel slow_fast_map(std::uint64_t seed) {
  LinearMapSpec spec;
  spec.real_eigenvalues = {0.99, 0.98, 0.95};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> fast(-0.3, 0.3);
  for (int i = 0; i < 20; ++i) spec.real_eigenvalues.push_back(fast(rng));
  spec.fixed_point = StateVector::LinSpaced(23, -1.0, 2.0);
  spec.conjugation_seed = seed;
  return LinearMapModel(spec);
}

}  // namespace

TEST(RpmOptions, ValidatesThresholds) {
  RpmOptions o;
  EXPECT_NO_THROW(o.validate());
  o.drop_threshold = 0.6;
  EXPECT_THROW(o.validate(), InvalidArgument);
  o = {};
  o.tolerance = 0.0;
  EXPECT_THROW(o.validate(), InvalidArgument);
}

TEST(RpmSolve, TwoModeLinearMapConvergesQuickly) {
  auto m = LinearMapModel::diagonal({0.99, 0.5}, vec({0.01, 0.5}));
  RpmOptions o;
  o.tolerance = 1e-10;
  auto r = rpm_solve(m, vec({0.0, 0.0}), {}, o);
  ASSERT_TRUE(r.converged());
  EXPECT_LE(r.residual, 1e-10);
  EXPECT_LE(r.map_calls, 40u);
  EXPECT_EQ(r.map_calls, m.evaluations());
  EXPECT_NEAR(r.u[0], 1.0, 1e-8);
  EXPECT_NEAR(r.u[1], 1.0, 1e-8);
  // Picard lower bound from the geometric decay of the slow mode.
  const double picard = std::ceil(std::log(1e-10) / std::log(0.99));
  EXPECT_GE(picard, 2292.0);
}

TEST(RpmSolve, StartAtFixedPoint) {
  auto m = LinearMapModel::diagonal({0.99, 0.5}, vec({0.01, 0.5}));
  RpmOptions o;
  o.tolerance = 1e-10;
  auto r = rpm_solve(m, vec({1.0, 1.0}), {}, o);
  EXPECT_TRUE(r.converged());
  EXPECT_LE(r.map_calls, 2u);
  EXPECT_EQ(r.basis.size(), 0u);
}

TEST(RpmSolve, MildlyUnstableScalar) {
  auto m = scalar_affine(1.02, 1.0);
  RpmOptions o;
  o.tolerance = 1e-10;
  auto r = rpm_solve(m, vec({1.5}), {}, o);
  ASSERT_TRUE(r.converged());
  EXPECT_NEAR(r.u[0], 1.0, 1e-10);

  auto d = direct_simulation(m, vec({1.5}), {}, 1e-10, 2000);
  EXPECT_FALSE(d.converged);
  EXPECT_GT(std::abs(d.u[0] - 1.0), 100.0);
}

TEST(RpmSolve, UnstableCaptureAcrossMultipliers) {
  for (double mu : {1.001, 1.01, 1.05, 1.1}) {
    for (double offset : {-0.5, 0.25, 0.5}) {
      auto m = scalar_affine(mu, 2.0);
      RpmOptions o;
      o.tolerance = 1e-10;
      auto r = rpm_solve(m, vec({2.0 + offset}), {}, o);
      ASSERT_TRUE(r.converged()) << mu << " " << offset;
      EXPECT_NEAR(r.u[0], 2.0, 1e-9);
      // |u_n - u*| = mu^n |offset| grows without bound.
      auto d = direct_simulation(m, vec({2.0 + offset}), {}, 1e-10, 500);
      EXPECT_FALSE(d.converged);
      EXPECT_GT(std::abs(d.u[0] - 2.0), std::abs(offset));
    }
  }
}

TEST(RpmSolve, OracleEquivalenceAndAcceleration) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    auto m = slow_fast_map(seed);
    const StateVector exact = m.fixed_point();
    RpmOptions o;
    o.tolerance = 1e-10;
    auto r = rpm_solve(m, StateVector::Zero(23), {}, o);
    ASSERT_TRUE(r.converged()) << seed;
    EXPECT_LE((r.u - exact).norm(), 1e-8 * exact.norm());

    auto d = direct_simulation(m, StateVector::Zero(23), {}, 1e-10, 100000);
    ASSERT_TRUE(d.converged);
    EXPECT_LE(10 * r.map_calls, d.map_calls) << "rpm " << r.map_calls << " picard " << d.map_calls;
  }
}

TEST(RpmSolve, ConvergedImpliesIndependentResidual) {
  for (std::uint64_t seed = 10; seed < 16; ++seed) {
    auto m = slow_fast_map(seed);
    RpmOptions o;
    o.tolerance = 1e-9;
    auto r = rpm_solve(m, StateVector::Ones(23), {}, o);
    ASSERT_TRUE(r.converged());
    FunctionTimestepper probe(23, [&m](const StateVector& u, const Parameters& p) { return m.evaluate(u, p); });
    EXPECT_LE(residual(probe, r.u, {}).norm, 1.1 * o.tolerance);
  }
}

TEST(RpmSolve, BasisOrthonormalAndCapped) {
  auto m = slow_fast_map(4);
  RpmOptions o;
  o.tolerance = 1e-10;
  o.max_basis = 2;
  auto r = rpm_solve(m, StateVector::Zero(23), {}, o);
  EXPECT_LE(r.basis.size(), 2u);
  EXPECT_LE(orthonormality_error(r.basis.z), 1e-12);
}

TEST(RpmSolve, PureRecursionWhenBasisDisabled) {
  auto m = LinearMapModel::diagonal({0.5, 0.25}, vec({0.5, 0.75}));
  RpmOptions o;
  o.tolerance = 1e-12;
  o.max_basis = 0;
  auto r = rpm_solve(m, vec({0.0, 0.0}), {}, o);
  auto d = direct_simulation(m, vec({0.0, 0.0}), {}, 1e-12, 1000);
  ASSERT_TRUE(r.converged());
  EXPECT_EQ(r.basis.size(), 0u);
  // RPM stops at the iterate whose image passed the test; direct simulation
  // returns that image. Same sequence, same number of map calls.
  EXPECT_EQ(r.map_calls, d.map_calls);
  auto before_last = direct_simulation(m, vec({0.0, 0.0}), {}, 0.0, d.cycles - 1);
  EXPECT_EQ(r.u, before_last.u);
}

TEST(RpmSolve, ReportsDivergence) {
  // Superlinear blow-up that no slow-subspace Newton step can tame.
  FunctionTimestepper m(1, [](const StateVector& u, const Parameters&) {
    return StateVector((u.array() * u.array() + 1.0).matrix());
  });
  RpmOptions o;
  o.max_basis = 0;
  auto r = rpm_solve(m, vec({2.0}), {}, o);
  EXPECT_EQ(r.status, RpmStatus::Diverged);
}

TEST(RpmSolve, IterationBudget) {
  auto m = LinearMapModel::diagonal({0.999}, vec({0.001}));
  RpmOptions o;
  o.tolerance = 1e-12;
  o.max_basis = 0;
  o.max_iterations = 5;
  auto r = rpm_solve(m, vec({0.0}), {}, o);
  EXPECT_EQ(r.status, RpmStatus::MaxIterations);
  EXPECT_EQ(r.iterations, 5);
  EXPECT_EQ(r.map_calls, 5u);
}

TEST(RpmSolve, SingularSlowNewtonAtUnitMultiplier) {
  // Multiplier exactly 1 along e1: I - H is singular once e1 is in the basis.
  FunctionTimestepper drift(2, [](const StateVector& u, const Parameters&) {
    StateVector v(2);
    v << u[0] + 0.0, 0.9 * u[1] + 0.1;
    return v;
  });
  SlowBasis warm(2);
  warm.z = Matrix::Identity(2, 1);
  RpmOptions o;
  o.tolerance = 1e-12;
  auto r = rpm_solve(drift, vec({1.0, 0.0}), {}, o, warm);
  EXPECT_EQ(r.status, RpmStatus::SingularSlowNewton);
}

TEST(SlowJacobian, DiagonalSingleDirection) {
  auto m = LinearMapModel::diagonal({0.99, 0.5}, vec({0.0, 0.0}));
  const StateVector u = StateVector::Zero(2);
  const StateVector f = m.evaluate(u, {});
  const Matrix h = slow_jacobian(m, u, f, Matrix::Identity(2, 1), {});
  EXPECT_NEAR(h(0, 0), 0.99, 1e-10);
}

TEST(SlowJacobian, TwoDirectionsCostTwoCalls) {
  auto m = LinearMapModel::diagonal({0.99, 0.95, 0.1}, vec({0.0, 0.0, 0.0}));
  const StateVector u = StateVector::Zero(3);
  const StateVector f = m.evaluate(u, {});
  const auto before = m.evaluations();
  const Matrix h = slow_jacobian(m, u, f, Matrix::Identity(3, 2), {});
  EXPECT_EQ(m.evaluations() - before, 2u);
  Matrix expected = Matrix::Zero(2, 2);
  expected.diagonal() << 0.99, 0.95;
  EXPECT_LE((h - expected).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(SlowJacobian, RotationBlock) {
  LinearMapSpec spec;
  spec.complex_pairs = {{0.97, 0.3}};
  LinearMapModel m(spec);
  const StateVector u = StateVector::Zero(2);
  const StateVector f = m.evaluate(u, {});
  SlowBasis b(2);
  b.z = Matrix::Identity(2, 2);
  b.h = slow_jacobian(m, u, f, b.z, {});
  b.h_stale = false;
  EXPECT_LE((b.h - m.matrix()).cwiseAbs().maxCoeff(), 1e-8);
  auto mus = slow_multipliers(b);
  ASSERT_EQ(mus.size(), 2u);
  EXPECT_NEAR(std::abs(mus[0] - std::polar(0.97, 0.3)), 0.0, 1e-8);
  EXPECT_NEAR(std::abs(mus[1] - std::polar(0.97, -0.3)), 0.0, 1e-8);
}

TEST(AdaptBasis, GrowsTowardsDominantMode) {
  auto m = LinearMapModel::diagonal({0.99, 0.3, 0.1}, vec({0.0, 0.0, 0.0}));
  auto d = picard_differences(m, vec({1.0, 1.0, 1.0}), 8);
  RpmOptions o;
  SlowBasis empty(3);
  auto r = adapt_basis(std::span<const StateVector>(d).last(4), empty, o);
  ASSERT_EQ(r.added, 1);
  ASSERT_EQ(r.basis.size(), 1u);
  EXPECT_GT(std::abs(r.basis.z(0, 0)), 0.999);
  EXPECT_NEAR(std::abs(r.ratios.front()), 0.99, 1e-6);
}

TEST(AdaptBasis, StaysEmptyForFastSpectrum) {
  auto m = LinearMapModel::diagonal({0.3, 0.1}, vec({0.0, 0.0}));
  auto d = picard_differences(m, vec({1.0, 1.0}), 5);
  RpmOptions o;
  auto r = adapt_basis(std::span<const StateVector>(d).last(4), SlowBasis(2), o);
  EXPECT_EQ(r.added, 0);
  EXPECT_EQ(r.basis.size(), 0u);
  ASSERT_FALSE(r.ratios.empty());
  EXPECT_NEAR(std::abs(r.ratios.front()), 0.3, 1e-6);
}

TEST(AdaptBasis, ComplexPairAddsTwo) {
  LinearMapSpec spec;
  spec.complex_pairs = {{0.97, 0.3}};
  spec.real_eigenvalues = {0.2, 0.1};
  spec.conjugation_seed = 8;
  LinearMapModel m(spec);
  auto d = picard_differences(m, StateVector::Ones(4), 10);
  RpmOptions o;
  auto r = adapt_basis(std::span<const StateVector>(d).last(4), SlowBasis(4), o);
  EXPECT_EQ(r.added, 2);
  EXPECT_EQ(r.basis.size(), 2u);
  EXPECT_LE(orthonormality_error(r.basis.z), 1e-12);
}

TEST(AdaptBasis, FullBasisIsReported) {
  auto m = LinearMapModel::diagonal({0.99, 0.3}, vec({0.0, 0.0}));
  auto d = picard_differences(m, vec({1.0, 1.0}), 6);
  RpmOptions o;
  o.max_basis = 0;
  auto r = adapt_basis(std::span<const StateVector>(d).last(4), SlowBasis(2), o);
  EXPECT_TRUE(r.basis_full);
  EXPECT_EQ(r.added, 0);
}

TEST(AdaptBasis, OrthonormalityAfterEveryEvent) {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> g;
  auto m = slow_fast_map(5);
  SlowBasis basis(23);
  RpmOptions o;
  o.max_basis = 12;
  StateVector u(23);
  for (auto& x : u) x = g(rng);
  for (int round = 0; round < 6; ++round) {
    std::vector<StateVector> d;
    StateVector w = u;
    for (int i = 0; i < 6; ++i) {
      StateVector next = m.evaluate(w, {});
      d.push_back(basis.complement(next - w));
      w = next;
    }
    auto r = adapt_basis(d, basis, o);
    basis = r.basis;
    EXPECT_LE(orthonormality_error(basis.z), 1e-12);
    for (auto& x : u) x = g(rng);
  }
}

TEST(ShrinkBasis, DropsNegligibleDirections) {
  SlowBasis b(3);
  b.z = Matrix::Identity(3, 2);
  b.h = Matrix::Zero(2, 2);
  b.h.diagonal() << 0.9, 0.001;
  b.h_stale = false;
  RpmOptions o;
  EXPECT_EQ(shrink_basis(b, o), 1);
  ASSERT_EQ(b.size(), 1u);
  EXPECT_NEAR(std::abs(b.z(0, 0)), 1.0, 1e-14);
  EXPECT_NEAR(b.h(0, 0), 0.9, 1e-14);
  EXPECT_LE(orthonormality_error(b.z), 1e-12);
}

TEST(ShrinkBasis, StaleJacobianLeavesBasisAlone) {
  SlowBasis b(3);
  b.z = Matrix::Identity(3, 2);
  b.h = Matrix::Zero(2, 2);
  b.h_stale = true;
  EXPECT_EQ(shrink_basis(b, {}), 0);
  EXPECT_EQ(b.size(), 2u);
}

TEST(SlowBasis, ProjectorsSumToIdentity) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> g;
  Matrix raw(40, 5);
  for (auto& x : raw.reshaped()) x = g(rng);
  SlowBasis b(40);
  append_orthonormal(b.z, raw);
  for (int i = 0; i < 100; ++i) {
    StateVector x(40);
    for (auto& v : x) v = g(rng);
    EXPECT_LE((b.project(x) + b.complement(x) - x).norm(), 1e-13);
  }
}

TEST(SlowDeterminant, EmptyAndDiagonal) {
  SlowBasis b(2);
  EXPECT_DOUBLE_EQ(slow_determinant(b), 1.0);
  b.z = Matrix::Identity(2, 2);
  b.h = Matrix::Zero(2, 2);
  b.h.diagonal() << 0.5, 1.5;
  EXPECT_NEAR(slow_determinant(b), -0.25, 1e-15);
}

TEST(DirectSimulation, StopsOnChange) {
  auto m = LinearMapModel::diagonal({0.5}, vec({0.5}));
  auto d = direct_simulation(m, vec({0.0}), {}, 1e-6, 1000);
  ASSERT_TRUE(d.converged);
  EXPECT_LE(d.change, 1e-6);
  EXPECT_EQ(static_cast<std::uint64_t>(d.cycles), d.map_calls);
  EXPECT_EQ(d.map_calls, m.evaluations());
}
