#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tskit/rpm.hpp"

namespace tskit {

struct BranchPoint {
  StateVector u;
  /// Phi(u; lambda), kept from the accepting corrector iteration.
  StateVector image;
  double lambda = 0.0;
  double arclength = 0.0;
  std::vector<Complex> multipliers;
  double residual = 0.0;
  bool fold = false;
  /// det(I_m - H) at this point.
  double slow_determinant = 1.0;
  int corrector_iterations = 0;
  SlowBasis basis;
};

struct ContinuationOptions {
  double step = 0.01;
  double step_min = 1e-6;
  double step_max = 0.05;
  double shrink_factor = 0.5;
  double grow_factor = 1.3;
  /// Step grows only after corrections taking at most this many iterations.
  int fast_corrector_iterations = 3;
  /// Steps that cross a sign change of det(I - H) are retried with halved
  /// length until they are no longer than this, so folds are bracketed tightly.
  double fold_step = 1e-3;
  int max_points = 400;
  int max_corrector_iterations = 30;
  double tolerance = 1e-8;
  /// Weight of the state part of the scaled metric; (1 - theta) weighs lambda.
  double theta = 0.5;
  /// > 0: attach Arnoldi multipliers with this many steps at every point.
  int arnoldi_steps = 0;
  RpmOptions rpm;

  void validate() const;
};

struct Prediction {
  StateVector u;
  double lambda = 0.0;
  StateVector tangent_u;
  double tangent_lambda = 0.0;
};

/// Scaled norm sqrt(theta |du|^2 + (1 - theta) dlambda^2).
double scaled_norm(const StateVector& du, double dlambda, double theta);

/// Secant predictor; without prev2 the tangent is the +lambda direction
/// (or -lambda with `reverse`).
Prediction predict(const BranchPoint& prev, const BranchPoint* prev2, double ds, double theta,
                   bool reverse = false);

/// Bordered Newton corrector on (slow coordinates, lambda) with one Picard
/// relaxation of the complement per iteration. `basis` is updated in place.
/// Throws CorrectorFailed when the iteration budget runs out.
BranchPoint correct(const Timestepper& stepper, const Prediction& prediction, const BranchPoint& prev,
                    double ds, const Parameters& p, SlowBasis& basis, const ContinuationOptions& opts);

enum class BranchTermination { LeftRange, PointBudget, StepUnderflow };

std::string to_string(BranchTermination t);

struct BranchResult {
  std::vector<BranchPoint> points;
  BranchTermination termination = BranchTermination::LeftRange;
  std::uint64_t map_calls = 0;
};

/// Seeds with rpm_solve at (start_u, start_lambda), then predict/correct
/// within [lambda_min, lambda_max]. `p` must designate the continuation
/// parameter.
BranchResult trace_branch(const Timestepper& stepper, const StateVector& start_u, double start_lambda,
                          const Parameters& p, double lambda_min, double lambda_max,
                          const ContinuationOptions& opts = {});

struct FoldRecord {
  double lambda = 0.0;
  StateVector u;
  std::size_t left = 0;
  std::size_t right = 0;
  double determinant = 0.0;
};

/// Sign changes of det(I - H) between consecutive points, located by
/// linear interpolation in arclength (no map calls).
std::vector<FoldRecord> detect_fold(const std::vector<BranchPoint>& branch);

/// As above, refined by arclength bisection with the corrector until
/// |det| <= 1e-8 or the arclength bracket is <= 1e-6.
std::vector<FoldRecord> detect_fold(const Timestepper& stepper, const std::vector<BranchPoint>& branch,
                                    const Parameters& p, const ContinuationOptions& opts = {});

}  // namespace tskit
