#include "tskit/rpm.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

namespace tskit {

void RpmOptions::validate() const {
  if (!(tolerance > 0.0)) throw InvalidArgument("rpm: tolerance must be positive");
  if (!(0.0 < drop_threshold && drop_threshold < grow_threshold && grow_threshold < 1.0)) {
    throw InvalidArgument("rpm: need 0 < drop_threshold < grow_threshold < 1");
  }
  if (max_iterations < 1) throw InvalidArgument("rpm: max_iterations must be >= 1");
  if (max_basis < 0) throw InvalidArgument("rpm: max_basis must be >= 0");
  if (history_length < 2) throw InvalidArgument("rpm: history_length must be >= 2");
  if (warmup_iterations < 0) throw InvalidArgument("rpm: warmup_iterations must be >= 0");
  if (refresh_interval < 1) throw InvalidArgument("rpm: refresh_interval must be >= 1");
}

std::string to_string(RpmStatus status) {
  switch (status) {
    case RpmStatus::Converged: return "Converged";
    case RpmStatus::MaxIterations: return "MaxIterations";
    case RpmStatus::SingularSlowNewton: return "SingularSlowNewton";
    case RpmStatus::Diverged: return "Diverged";
  }
  return "Unknown";
}

Matrix slow_jacobian(const Timestepper& stepper, const StateVector& u, const StateVector& phi_u,
                     const Matrix& z, const Parameters& p, const EpsilonPolicy& eps) {
  const Eigen::Index m = z.cols();
  Matrix h(m, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const StateVector jv = jacobian_vector_product(stepper, u, phi_u, z.col(j), eps, p);
    h.col(j) = z.transpose() * jv;
  }
  return h;
}

std::vector<Complex> slow_multipliers(const SlowBasis& basis) {
  if (basis.size() == 0) return {};
  return dense_eigenvalues(basis.h).values;
}

double slow_determinant(const SlowBasis& basis) {
  if (basis.size() == 0) return 1.0;
  const Matrix a = Matrix::Identity(basis.h.rows(), basis.h.cols()) - basis.h;
  return a.determinant();
}

AdaptResult adapt_basis(std::span<const StateVector> history, const SlowBasis& basis,
                        const RpmOptions& opts) {
  AdaptResult out;
  out.basis = basis;
  const std::size_t total = history.size();
  if (total < 2) return out;
  const std::size_t count = std::min<std::size_t>(total, static_cast<std::size_t>(opts.history_length));
  const std::size_t first = total - count;

  // Differences restricted to Q.
  std::vector<StateVector> d;
  d.reserve(count);
  for (std::size_t i = first; i < total; ++i) d.push_back(basis.complement(history[i]));

  // Incremental QR of d[0..count-2]; stop once the sequence stops adding
  // new directions (Krylov space exhausted).
  const Eigen::Index n = d.front().size();
  Matrix w(n, 0);
  Matrix r = Matrix::Zero(count - 1, count - 1);
  Eigen::Index rank = 0;
  for (std::size_t j = 0; j + 1 < count; ++j) {
    StateVector v = d[j];
    const double original = v.norm();
    if (!(original > 0.0)) break;
    StateVector coeff = StateVector::Zero(rank);
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index i = 0; i < rank; ++i) {
        const double c = w.col(i).dot(v);
        coeff[i] += c;
        v -= c * w.col(i);
      }
    }
    const double remaining = v.norm();
    if (remaining <= 1e-10 * original) break;
    w.conservativeResize(Eigen::NoChange, rank + 1);
    w.col(rank) = v / remaining;
    r.block(0, rank, rank, 1) = coeff;
    r(rank, rank) = remaining;
    ++rank;
  }
  if (rank == 0) return out;

  // Projected one-step operator T with D1 ~= W T R on the retained columns.
  Matrix d1(n, rank);
  for (Eigen::Index j = 0; j < rank; ++j) d1.col(j) = d[j + 1];
  const Matrix r_top = r.topLeftCorner(rank, rank);
  const Matrix x = w.transpose() * d1;
  const Matrix t = r_top.transpose().triangularView<Eigen::Lower>().solve(x.transpose()).transpose();

  Eigen::EigenSolver<Matrix> es(t, true);
  if (es.info() != Eigen::Success) return out;
  const auto& vals = es.eigenvalues();
  Eigen::Index dominant = 0;
  for (Eigen::Index i = 1; i < vals.size(); ++i) {
    if (std::abs(vals[i]) > std::abs(vals[dominant])) dominant = i;
  }
  for (Eigen::Index i = 0; i < vals.size(); ++i) out.ratios.push_back(vals[i]);
  sort_by_modulus(out.ratios);

  const Complex mu = vals[dominant];
  if (std::abs(mu) <= opts.grow_threshold) return out;

  const bool complex_pair = std::abs(mu.imag()) > 1e-12 * std::abs(mu);
  const int wanted = complex_pair ? 2 : 1;
  if (static_cast<int>(basis.size()) + wanted > opts.max_basis) {
    out.basis_full = true;
    return out;
  }
  const Eigen::VectorXcd y = es.eigenvectors().col(dominant);
  Matrix directions(n, wanted);
  directions.col(0) = w * y.real();
  if (complex_pair) directions.col(1) = w * y.imag();

  Matrix z = basis.z;
  out.added = append_orthonormal(z, directions);
  if (out.added > 0) {
    out.basis.z = std::move(z);
    out.basis.h = Matrix(0, 0);
    out.basis.h_stale = true;
    out.basis.iterations_since_refresh = 0;
  }
  return out;
}

int shrink_basis(SlowBasis& basis, const RpmOptions& opts) {
  const Eigen::Index m = static_cast<Eigen::Index>(basis.size());
  if (m == 0 || basis.h_stale) return 0;
  Eigen::EigenSolver<Matrix> es(basis.h, true);
  if (es.info() != Eigen::Success) return 0;
  const auto& vals = es.eigenvalues();

  Matrix keep(m, 0);
  int kept_values = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (std::abs(vals[i]) < opts.drop_threshold) continue;
    ++kept_values;
    const Eigen::VectorXcd v = es.eigenvectors().col(i);
    Matrix cols(m, v.imag().norm() > 0.0 ? 2 : 1);
    cols.col(0) = v.real();
    if (cols.cols() == 2) cols.col(1) = v.imag();
    append_orthonormal(keep, cols);
  }
  if (kept_values == m) return 0;

  const int dropped = static_cast<int>(m - keep.cols());
  if (dropped <= 0) return 0;
  basis.h = keep.transpose() * basis.h * keep;
  basis.z = basis.z * keep;
  // Re-orthonormalize against accumulated roundoff.
  Matrix z(basis.z.rows(), 0);
  append_orthonormal(z, basis.z);
  if (z.cols() == basis.z.cols()) {
    basis.z = std::move(z);
  } else {
    basis.h_stale = true;
    basis.z = std::move(z);
  }
  return dropped;
}

namespace {

double condition_number(const Matrix& a) {
  Eigen::JacobiSVD<Matrix> svd(a);
  const auto& s = svd.singularValues();
  const double smin = s[s.size() - 1];
  if (!(smin > 0.0)) return std::numeric_limits<double>::infinity();
  return s[0] / smin;
}

}  // namespace

FixedPointResult rpm_solve(const Timestepper& stepper, const StateVector& u0, const Parameters& p,
                           const RpmOptions& opts, const std::optional<SlowBasis>& warm_basis) {
  opts.validate();
  const std::size_t n = stepper.dimension();
  if (static_cast<std::size_t>(u0.size()) != n) {
    throw DimensionMismatch("rpm_solve: initial state dimension differs from the timestepper");
  }

  FixedPointResult result;
  SlowBasis basis(n);
  if (warm_basis) {
    if (warm_basis->state_dimension() != n) {
      throw DimensionMismatch("rpm_solve: warm basis dimension differs from the timestepper");
    }
    basis = *warm_basis;
    if (static_cast<int>(basis.size()) > opts.max_basis) {
      basis.z = basis.z.leftCols(opts.max_basis).eval();
      basis.h_stale = true;
    }
    if (basis.h.rows() != basis.z.cols()) basis.h_stale = true;
  }

  const std::uint64_t calls_before = stepper.evaluations();
  StateVector u = u0;
  std::deque<StateVector> history;
  int since_change = 0;
  double min_residual = std::numeric_limits<double>::infinity();
  bool finished = false;

  for (int it = 0; it < opts.max_iterations; ++it) {
    const StateVector f = stepper.evaluate(u, p);
    const double res = (f - u).norm();
    result.residual_history.push_back(res);
    result.u = u;
    result.residual = res;
    result.iterations = it + 1;
    min_residual = std::min(min_residual, res);

    if (res <= opts.tolerance) {
      result.status = RpmStatus::Converged;
      finished = true;
      break;
    }
    if (res > opts.divergence_factor * min_residual) {
      result.status = RpmStatus::Diverged;
      finished = true;
      break;
    }

    if (basis.size() > 0 && (basis.h_stale || basis.iterations_since_refresh >= opts.refresh_interval)) {
      basis.h = slow_jacobian(stepper, u, f, basis.z, p, opts.eps);
      basis.h_stale = false;
      basis.iterations_since_refresh = 0;
      if (shrink_basis(basis, opts) > 0) {
        history.clear();
        since_change = 0;
        if (basis.h_stale && basis.size() > 0) {
          basis.h = slow_jacobian(stepper, u, f, basis.z, p, opts.eps);
          basis.h_stale = false;
        }
      }
    }

    StateVector q_next;
    StateVector p_next;
    StateVector q_change;
    if (basis.size() > 0) {
      const StateVector zf = basis.z.transpose() * f;
      const StateVector zu = basis.z.transpose() * u;
      q_next = f - basis.z * zf;
      q_change = q_next - (u - basis.z * zu);

      const Matrix newton = Matrix::Identity(basis.size(), basis.size()) - basis.h;
      if (condition_number(newton) > opts.singular_condition) {
        result.status = RpmStatus::SingularSlowNewton;
        finished = true;
        break;
      }
      const StateVector dc = newton.fullPivLu().solve(zf - zu);
      p_next = basis.z * (zu + dc);
    } else {
      q_next = f;
      q_change = f - u;
      p_next = StateVector::Zero(n);
    }
    u = p_next + q_next;
    ++basis.iterations_since_refresh;

    history.push_back(std::move(q_change));
    while (history.size() > static_cast<std::size_t>(opts.history_length)) history.pop_front();
    ++since_change;

    const double noise_floor = 1e-13 * (1.0 + u.norm());
    if (since_change >= opts.warmup_iterations && history.size() >= 2 &&
        history.back().norm() > noise_floor) {
      std::vector<StateVector> hist(history.begin(), history.end());
      AdaptResult adapted = adapt_basis(hist, basis, opts);
      if (adapted.basis_full) result.basis_full = true;
      if (adapted.added > 0) {
        basis = std::move(adapted.basis);
        history.clear();
        since_change = 0;
      }
    }
  }

  if (!finished) result.status = RpmStatus::MaxIterations;
  result.basis = std::move(basis);
  result.map_calls = stepper.evaluations() - calls_before;
  return result;
}

DirectResult direct_simulation(const Timestepper& stepper, const StateVector& u0, const Parameters& p,
                               double tolerance, int max_cycles) {
  DirectResult out;
  const std::uint64_t before = stepper.evaluations();
  out.u = u0;
  for (int c = 0; c < max_cycles; ++c) {
    StateVector next = stepper.evaluate(out.u, p);
    out.change = (next - out.u).norm();
    out.u = std::move(next);
    out.cycles = c + 1;
    if (out.change <= tolerance) {
      out.converged = true;
      break;
    }
  }
  out.map_calls = stepper.evaluations() - before;
  return out;
}

}  // namespace tskit
