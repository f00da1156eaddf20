#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tskit/linalg.hpp"
#include "tskit/timestepper.hpp"

namespace tskit {

/// Orthonormal basis Z of the slow subspace P together with the projected
/// Jacobian H = Z^T Phi_U Z.
struct SlowBasis {
  Matrix z;
  Matrix h;
  bool h_stale = true;
  int iterations_since_refresh = 0;

  SlowBasis() = default;
  explicit SlowBasis(std::size_t n) : z(n, 0), h(0, 0) {}

  std::size_t size() const { return static_cast<std::size_t>(z.cols()); }
  std::size_t state_dimension() const { return static_cast<std::size_t>(z.rows()); }

  /// Z (Z^T x)
  StateVector project(const StateVector& x) const { return z * (z.transpose() * x); }
  /// x - Z (Z^T x)
  StateVector complement(const StateVector& x) const { return x - project(x); }
};

struct RpmOptions {
  double tolerance = 1e-6;
  int max_iterations = 1000;
  int max_basis = 10;
  double grow_threshold = 0.5;
  double drop_threshold = 0.01;
  int history_length = 4;
  int warmup_iterations = 3;
  /// H is recomputed whenever the basis changes and at least this often.
  int refresh_interval = 5;
  double singular_condition = 1e12;
  double divergence_factor = 1e6;
  EpsilonPolicy eps;

  void validate() const;
};

enum class RpmStatus { Converged, MaxIterations, SingularSlowNewton, Diverged };

std::string to_string(RpmStatus status);

struct FixedPointResult {
  StateVector u;
  double residual = 0.0;
  int iterations = 0;
  std::uint64_t map_calls = 0;
  SlowBasis basis;
  RpmStatus status = RpmStatus::MaxIterations;
  /// Set when growth was demanded with the basis already at max_basis.
  bool basis_full = false;
  std::vector<double> residual_history;

  bool converged() const { return status == RpmStatus::Converged; }
};

/// Recursive Projection Method: Newton on the adaptively identified slow
/// subspace, one Picard application per outer iteration on its complement.
FixedPointResult rpm_solve(const Timestepper& stepper, const StateVector& u0, const Parameters& p,
                           const RpmOptions& opts = {},
                           const std::optional<SlowBasis>& warm_basis = std::nullopt);

/// H(:, j) = Z^T * J_fd(u) Z(:, j). Exactly Z.cols() map calls.
Matrix slow_jacobian(const Timestepper& stepper, const StateVector& u, const StateVector& phi_u,
                     const Matrix& z, const Parameters& p, const EpsilonPolicy& eps = {});

struct AdaptResult {
  SlowBasis basis;
  int added = 0;
  bool basis_full = false;
  /// Ritz values of the difference-history operator, sorted.
  std::vector<Complex> ratios;
};

/// Growth test on a history of successive Q-projected differences (oldest
/// first). Appends the eigen-direction of the dominant ratio (two vectors
/// for a complex pair) when its modulus exceeds `grow_threshold`.
AdaptResult adapt_basis(std::span<const StateVector> history, const SlowBasis& basis,
                        const RpmOptions& opts);

/// Deflates directions whose Ritz values of H fall below `drop_threshold`
/// in modulus. H must be fresh. Returns the number of directions removed.
int shrink_basis(SlowBasis& basis, const RpmOptions& opts);

/// Eigenvalues of H (the slow Floquet multiplier estimates).
std::vector<Complex> slow_multipliers(const SlowBasis& basis);

/// det(I - H); 1 for an empty basis.
double slow_determinant(const SlowBasis& basis);

struct DirectResult {
  StateVector u;
  double change = 0.0;
  int cycles = 0;
  bool converged = false;
  std::uint64_t map_calls = 0;
};

/// Plain successive substitution until |u_{n+1} - u_n| <= tolerance.
DirectResult direct_simulation(const Timestepper& stepper, const StateVector& u0, const Parameters& p,
                               double tolerance, int max_cycles);

}  // namespace tskit
