#include "tskit/continuation.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <optional>

#include <Eigen/LU>

#include "tskit/arnoldi.hpp"

namespace tskit {

void ContinuationOptions::validate() const {
  if (!(0.0 < step_min && step_min <= step && step <= step_max)) {
    throw InvalidArgument("continuation: need 0 < step_min <= step <= step_max");
  }
  if (!(0.0 < theta && theta < 1.0)) throw InvalidArgument("continuation: theta must lie in (0, 1)");
  if (!(tolerance > 0.0)) throw InvalidArgument("continuation: tolerance must be positive");
  if (!(0.0 < shrink_factor && shrink_factor < 1.0)) throw InvalidArgument("continuation: shrink_factor in (0, 1)");
  if (!(grow_factor >= 1.0)) throw InvalidArgument("continuation: grow_factor must be >= 1");
  if (!(fold_step > 0.0)) throw InvalidArgument("continuation: fold_step must be positive");
  if (max_points < 1) throw InvalidArgument("continuation: max_points must be >= 1");
  if (max_corrector_iterations < 1) throw InvalidArgument("continuation: max_corrector_iterations >= 1");
  rpm.validate();
}

std::string to_string(BranchTermination t) {
  switch (t) {
    case BranchTermination::LeftRange: return "LeftRange";
    case BranchTermination::PointBudget: return "PointBudget";
    case BranchTermination::StepUnderflow: return "StepUnderflow";
  }
  return "Unknown";
}

double scaled_norm(const StateVector& du, double dlambda, double theta) {
  return std::sqrt(theta * du.squaredNorm() + (1.0 - theta) * dlambda * dlambda);
}

Prediction predict(const BranchPoint& prev, const BranchPoint* prev2, double ds, double theta, bool reverse) {
  Prediction out;
  if (prev2 == nullptr) {
    out.tangent_u = StateVector::Zero(prev.u.size());
    out.tangent_lambda = (reverse ? -1.0 : 1.0) / std::sqrt(1.0 - theta);
  } else {
    const StateVector du = prev.u - prev2->u;
    const double dl = prev.lambda - prev2->lambda;
    const double len = scaled_norm(du, dl, theta);
    if (!(len >= 1e-14)) throw DegenerateTangent("predict: consecutive branch points coincide");
    out.tangent_u = du / len;
    out.tangent_lambda = dl / len;
  }
  out.u = prev.u + ds * out.tangent_u;
  out.lambda = prev.lambda + ds * out.tangent_lambda;
  return out;
}

namespace {

void refresh_h(const Timestepper& stepper, const StateVector& u, const StateVector& f, const Parameters& p,
               SlowBasis& basis, const RpmOptions& rpm) {
  if (basis.size() == 0) {
    basis.h = Matrix(0, 0);
    basis.h_stale = false;
    return;
  }
  basis.h = slow_jacobian(stepper, u, f, basis.z, p, rpm.eps);
  basis.h_stale = false;
  basis.iterations_since_refresh = 0;
  if (shrink_basis(basis, rpm) > 0 && basis.h_stale && basis.size() > 0) {
    basis.h = slow_jacobian(stepper, u, f, basis.z, p, rpm.eps);
    basis.h_stale = false;
  }
}

void fill_point_spectrum(BranchPoint& pt, const SlowBasis& basis) {
  pt.multipliers = slow_multipliers(basis);
  pt.slow_determinant = slow_determinant(basis);
  pt.basis = basis;
}

}  // namespace

BranchPoint correct(const Timestepper& stepper, const Prediction& prediction, const BranchPoint& prev,
                    double ds, const Parameters& p, SlowBasis& basis, const ContinuationOptions& opts) {
  if (!prediction.u.allFinite() || !std::isfinite(prediction.lambda)) {
    throw CorrectorFailed("correct: prediction is not finite");
  }
  const double theta = opts.theta;
  const StateVector& tu = prediction.tangent_u;
  const double tl = prediction.tangent_lambda;

  StateVector u = prediction.u;
  double lambda = prediction.lambda;
  std::deque<StateVector> history;
  int since_change = 0;

  for (int it = 0; it <= opts.max_corrector_iterations; ++it) {
    const Parameters pl = p.with_continuation(lambda);
    const StateVector f = stepper.evaluate(u, pl);
    const double res = (f - u).norm();
    const double arc = theta * tu.dot(u - prev.u) + (1.0 - theta) * tl * (lambda - prev.lambda) - ds;

    refresh_h(stepper, u, f, pl, basis, opts.rpm);

    if (res <= opts.tolerance && std::abs(arc) <= opts.tolerance) {
      BranchPoint pt;
      pt.u = u;
      pt.image = f;
      pt.lambda = lambda;
      pt.residual = res;
      pt.corrector_iterations = it;
      fill_point_spectrum(pt, basis);
      return pt;
    }
    if (it == opts.max_corrector_iterations) break;

    const double hl = opts.rpm.eps.base * (1.0 + std::abs(lambda));
    const StateVector f_lambda = stepper.evaluate(u, p.with_continuation(lambda + hl));
    const StateVector phi_lambda = (f_lambda - f) / hl;

    const auto m = static_cast<Eigen::Index>(basis.size());
    const StateVector zu = basis.z.transpose() * u;
    const StateVector zf = basis.z.transpose() * f;
    const StateVector picard_change = basis.complement(f - u);
    const StateVector q_phi_lambda = basis.complement(phi_lambda);

    Matrix a = Matrix::Zero(m + 1, m + 1);
    StateVector rhs(m + 1);
    if (m > 0) {
      a.topLeftCorner(m, m) = basis.h - Matrix::Identity(m, m);
      a.topRightCorner(m, 1) = basis.z.transpose() * phi_lambda;
      a.bottomLeftCorner(1, m) = theta * (basis.z.transpose() * tu).transpose();
      rhs.head(m) = -(zf - zu);
    }
    a(m, m) = (1.0 - theta) * tl + theta * tu.dot(q_phi_lambda);
    rhs[m] = -arc - theta * tu.dot(picard_change);

    Eigen::FullPivLU<Matrix> lu(a);
    if (!lu.isInvertible()) throw CorrectorFailed("correct: bordered system is singular");
    const StateVector step = lu.solve(rhs);
    if (!step.allFinite()) throw CorrectorFailed("correct: non-finite Newton step");

    const double dlambda = step[m];
    const StateVector q_part = basis.complement(f + phi_lambda * dlambda);
    u = basis.z * (zu + step.head(m)) + q_part;
    lambda += dlambda;

    history.push_back(picard_change);
    while (history.size() > static_cast<std::size_t>(opts.rpm.history_length)) history.pop_front();
    ++since_change;
    if (since_change >= opts.rpm.warmup_iterations && history.size() >= 2 &&
        history.back().norm() > 1e-13 * (1.0 + u.norm())) {
      std::vector<StateVector> hist(history.begin(), history.end());
      AdaptResult adapted = adapt_basis(hist, basis, opts.rpm);
      if (adapted.added > 0) {
        basis = std::move(adapted.basis);
        history.clear();
        since_change = 0;
      }
    }
  }
  throw CorrectorFailed("correct: no convergence within the iteration budget");
}

namespace {

// Power-iteration probe of Q Phi_U Q carried along the branch; feeds the
// same growth test RPM uses so that slow directions are found even where
// the corrector has nothing to relax.
class SlowProbe {
 public:
  explicit SlowProbe(std::size_t n) : n_(n) {}

  // Returns true when the basis grew.
  bool advance(const Timestepper& stepper, const StateVector& u, const StateVector& f, const Parameters& p,
               SlowBasis& basis, const RpmOptions& rpm) {
    if (basis.size() >= n_ || static_cast<int>(basis.size()) >= rpm.max_basis) return false;
    if (history_.empty()) {
      StateVector w = basis.complement(StateVector::Ones(n_));
      if (w.norm() <= 1e-8 * std::sqrt(static_cast<double>(n_))) {
        w = basis.complement(StateVector::LinSpaced(n_, 1.0, 2.0));
      }
      if (!(w.norm() > 0.0)) return false;
      history_.push_back(w / w.norm());
    }
    const StateVector& last = history_.back();
    const double last_norm = last.norm();
    if (!(last_norm > 0.0)) {
      history_.clear();
      return false;
    }
    StateVector next = basis.complement(jacobian_vector_product(stepper, u, f, last, rpm.eps, p));
    history_.push_back(std::move(next));
    while (history_.size() > static_cast<std::size_t>(rpm.history_length)) history_.pop_front();

    // Keep magnitudes bounded; a common factor leaves the ratios intact.
    const double scale = history_.back().norm();
    if (scale > 0.0 && (scale < 1e-50 || scale > 1e50)) {
      for (auto& v : history_) v /= scale;
    }
    if (history_.size() < 2) return false;
    std::vector<StateVector> hist(history_.begin(), history_.end());
    AdaptResult adapted = adapt_basis(hist, basis, rpm);
    if (adapted.added == 0) return false;
    basis = std::move(adapted.basis);
    history_.clear();
    return true;
  }

 private:
  std::size_t n_;
  std::deque<StateVector> history_;
};

}  // namespace

BranchResult trace_branch(const Timestepper& stepper, const StateVector& start_u, double start_lambda,
                          const Parameters& p, double lambda_min, double lambda_max,
                          const ContinuationOptions& opts) {
  opts.validate();
  if (p.continuation_name().empty()) throw InvalidArgument("trace_branch: no continuation parameter");
  if (lambda_min > lambda_max) std::swap(lambda_min, lambda_max);
  const std::uint64_t calls_before = stepper.evaluations();

  BranchResult out;
  RpmOptions seed_opts = opts.rpm;
  seed_opts.tolerance = std::min(seed_opts.tolerance, opts.tolerance);
  const Parameters p0 = p.with_continuation(start_lambda);
  FixedPointResult seed = rpm_solve(stepper, start_u, p0, seed_opts);
  if (!seed.converged()) {
    throw InitialSolveFailed("trace_branch: initial solve ended with status " + to_string(seed.status));
  }

  SlowBasis basis = seed.basis;
  SlowProbe probe(stepper.dimension());
  {
    BranchPoint first;
    first.u = seed.u;
    first.lambda = start_lambda;
    first.residual = seed.residual;
    const StateVector f = stepper.evaluate(first.u, p0);
    first.image = f;
    refresh_h(stepper, first.u, f, p0, basis, opts.rpm);
    if (probe.advance(stepper, first.u, f, p0, basis, opts.rpm)) refresh_h(stepper, first.u, f, p0, basis, opts.rpm);
    fill_point_spectrum(first, basis);
    if (opts.arnoldi_steps > 0) {
      const int k = std::min<int>({opts.arnoldi_steps, static_cast<int>(stepper.dimension()), kArnoldiMaxSteps});
      FloquetResult fr = floquet_multipliers(stepper, first.u, p0, k);
      first.multipliers.clear();
      for (const auto& rp : fr.pairs) first.multipliers.push_back(rp.value);
    }
    out.points.push_back(std::move(first));
  }

  if (lambda_min == lambda_max || start_lambda < lambda_min || start_lambda > lambda_max) {
    out.termination = BranchTermination::LeftRange;
    out.map_calls = stepper.evaluations() - calls_before;
    return out;
  }

  const bool reverse = start_lambda >= lambda_max;
  double ds = opts.step;
  bool done = false;
  while (!done) {
    if (static_cast<int>(out.points.size()) >= opts.max_points) {
      out.termination = BranchTermination::PointBudget;
      break;
    }
    const BranchPoint& prev = out.points.back();
    const BranchPoint* prev2 = out.points.size() >= 2 ? &out.points[out.points.size() - 2] : nullptr;

    std::optional<BranchPoint> accepted;
    SlowBasis trial = basis;
    Prediction pred;
    try {
      pred = predict(prev, prev2, ds, opts.theta, reverse);
      BranchPoint pt = correct(stepper, pred, prev, ds, p, trial, opts);
      // Reject corrections that turned the branch around.
      const double advance = opts.theta * pred.tangent_u.dot(pt.u - prev.u) +
                             (1.0 - opts.theta) * pred.tangent_lambda * (pt.lambda - prev.lambda);
      const bool crosses = (pt.slow_determinant > 0.0) != (prev.slow_determinant > 0.0);
      if (advance > 0.0 && crosses && ds > opts.fold_step) {
        ds = std::max(ds * opts.shrink_factor, opts.fold_step);
        continue;
      }
      if (advance > 0.0) accepted = std::move(pt);
    } catch (const CorrectorFailed&) {
    } catch (const NonFiniteOutput&) {
    } catch (const NonFiniteInput&) {
    }

    if (!accepted) {
      ds *= opts.shrink_factor;
      if (ds < opts.step_min) {
        out.termination = BranchTermination::StepUnderflow;
        break;
      }
      continue;
    }

    BranchPoint pt = std::move(*accepted);
    if (pt.lambda < lambda_min || pt.lambda > lambda_max) {
      out.termination = BranchTermination::LeftRange;
      done = true;
      break;
    }
    basis = std::move(trial);
    const Parameters pl = p.with_continuation(pt.lambda);
    if (probe.advance(stepper, pt.u, pt.image, pl, basis, opts.rpm)) {
      refresh_h(stepper, pt.u, pt.image, pl, basis, opts.rpm);
      fill_point_spectrum(pt, basis);
    }
    if (opts.arnoldi_steps > 0) {
      const int k = std::min<int>({opts.arnoldi_steps, static_cast<int>(stepper.dimension()), kArnoldiMaxSteps});
      FloquetResult fr = floquet_multipliers(stepper, pt.u, pl, k);
      pt.multipliers.clear();
      for (const auto& rp : fr.pairs) pt.multipliers.push_back(rp.value);
    }
    pt.arclength = prev.arclength + ds;
    pt.fold = (pt.slow_determinant > 0.0) != (prev.slow_determinant > 0.0);
    const int iterations = pt.corrector_iterations;
    out.points.push_back(std::move(pt));
    if (iterations <= opts.fast_corrector_iterations) ds = std::min(ds * opts.grow_factor, opts.step_max);
  }

  out.map_calls = stepper.evaluations() - calls_before;
  return out;
}

std::vector<FoldRecord> detect_fold(const std::vector<BranchPoint>& branch) {
  std::vector<FoldRecord> folds;
  for (std::size_t i = 1; i < branch.size(); ++i) {
    const BranchPoint& a = branch[i - 1];
    const BranchPoint& b = branch[i];
    if ((a.slow_determinant > 0.0) == (b.slow_determinant > 0.0)) continue;
    const double denom = a.slow_determinant - b.slow_determinant;
    const double w = denom != 0.0 ? a.slow_determinant / denom : 0.5;
    FoldRecord rec;
    rec.left = i - 1;
    rec.right = i;
    rec.lambda = a.lambda + w * (b.lambda - a.lambda);
    rec.u = a.u + w * (b.u - a.u);
    rec.determinant = 0.0;
    folds.push_back(std::move(rec));
  }
  return folds;
}

std::vector<FoldRecord> detect_fold(const Timestepper& stepper, const std::vector<BranchPoint>& branch,
                                    const Parameters& p, const ContinuationOptions& opts) {
  std::vector<FoldRecord> folds;
  for (std::size_t i = 1; i < branch.size(); ++i) {
    const BranchPoint& a = branch[i - 1];
    const BranchPoint& b = branch[i];
    if ((a.slow_determinant > 0.0) == (b.slow_determinant > 0.0)) continue;

    FoldRecord rec;
    rec.left = i - 1;
    rec.right = i;
    const bool a_closer = std::abs(a.slow_determinant) <= std::abs(b.slow_determinant);
    rec.lambda = a_closer ? a.lambda : b.lambda;
    rec.u = a_closer ? a.u : b.u;
    rec.determinant = a_closer ? a.slow_determinant : b.slow_determinant;

    const StateVector du = b.u - a.u;
    const double dl = b.lambda - a.lambda;
    const double span = scaled_norm(du, dl, opts.theta);
    if (span > 0.0) {
      Prediction dir;
      dir.tangent_u = du / span;
      dir.tangent_lambda = dl / span;
      double lo = 0.0;
      double hi = span;
      const bool lo_positive = a.slow_determinant > 0.0;
      SlowBasis basis = a.basis;
      for (int iter = 0; iter < 80 && std::abs(rec.determinant) > 1e-8 && hi - lo > 1e-6; ++iter) {
        const double s = 0.5 * (lo + hi);
        dir.u = a.u + s * dir.tangent_u;
        dir.lambda = a.lambda + s * dir.tangent_lambda;
        SlowBasis trial = basis;
        BranchPoint mid;
        try {
          mid = correct(stepper, dir, a, s, p, trial, opts);
        } catch (const CorrectorFailed&) {
          break;
        }
        if (std::abs(mid.slow_determinant) < std::abs(rec.determinant)) {
          rec.lambda = mid.lambda;
          rec.u = mid.u;
          rec.determinant = mid.slow_determinant;
        }
        if ((mid.slow_determinant > 0.0) == lo_positive) {
          lo = s;
        } else {
          hi = s;
        }
      }
    }
    folds.push_back(std::move(rec));
  }
  return folds;
}

}  // namespace tskit
