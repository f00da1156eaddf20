#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tskit/linalg.hpp"
#include "tskit/timestepper.hpp"

namespace tskit {

/// Hard ceiling on Arnoldi steps (no restarting).
inline constexpr int kArnoldiMaxSteps = 60;

/// A V_k = V_{k+1} Hbar, with A the finite-difference action of Phi_U.
struct ArnoldiFactorization {
  Matrix v;     // N x (k+1), or N x k after breakdown
  Matrix hbar;  // (k+1) x k
  int k = 0;
  bool breakdown = false;
  double fixed_point_residual = 0.0;
  std::string warning;

  /// Leading k x k block.
  Matrix h() const { return hbar.topLeftCorner(k, k); }
};

ArnoldiFactorization arnoldi_factorize(const Timestepper& stepper, const StateVector& u_star,
                                       const Parameters& p, int k,
                                       const std::optional<StateVector>& start = std::nullopt,
                                       const EpsilonPolicy& eps = {});

struct RitzPair {
  Complex value;
  double residual = 0.0;
  /// Pairs with numerically coincident values share a tag.
  int cluster = 0;
};

struct FloquetOptions {
  double stability_margin = 1e-8;
  std::optional<StateVector> start;
  EpsilonPolicy eps;
};

struct FloquetResult {
  std::vector<RitzPair> pairs;  // descending |mu|
  bool stable = false;
  ArnoldiFactorization factorization;
};

FloquetResult floquet_multipliers(const Timestepper& stepper, const StateVector& u_star,
                                  const Parameters& p, int k, const FloquetOptions& opts = {});

/// Ritz pairs of a completed factorization; no map calls.
std::vector<RitzPair> ritz_pairs(const ArnoldiFactorization& f);

}  // namespace tskit
