#include "tskit/arnoldi.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/LU>

namespace tskit {

ArnoldiFactorization arnoldi_factorize(const Timestepper& stepper, const StateVector& u_star,
                                       const Parameters& p, int k,
                                       const std::optional<StateVector>& start,
                                       const EpsilonPolicy& eps) {
  const auto n = static_cast<int>(stepper.dimension());
  if (u_star.size() != n) throw DimensionMismatch("arnoldi_factorize: state dimension mismatch");
  const int k_limit = std::min(n, kArnoldiMaxSteps);
  if (k < 1 || k > k_limit) {
    std::ostringstream msg;
    msg << "arnoldi_factorize: k = " << k << " outside [1, " << k_limit << "]";
    throw InvalidArgument(msg.str());
  }

  ArnoldiFactorization f;
  const StateVector phi = stepper.evaluate(u_star, p);
  f.fixed_point_residual = (phi - u_star).norm();
  if (f.fixed_point_residual > 1e-2) {
    std::ostringstream msg;
    msg << "arnoldi_factorize: |u - Phi(u)| = " << f.fixed_point_residual << " > 1e-2";
    throw NotAFixedPoint(msg.str());
  }
  if (f.fixed_point_residual > 1e-4) {
    std::ostringstream msg;
    msg << "state is only an approximate fixed point (residual " << f.fixed_point_residual << ")";
    f.warning = msg.str();
  }

  StateVector v0 = start ? *start : StateVector::Ones(n);
  if (v0.size() != n) throw DimensionMismatch("arnoldi_factorize: start vector dimension mismatch");
  const double v0_norm = v0.norm();
  if (!(v0_norm > 0.0)) throw ZeroDirection("arnoldi_factorize: zero start vector");

  f.v = Matrix::Zero(n, k + 1);
  f.hbar = Matrix::Zero(k + 1, k);
  f.v.col(0) = v0 / v0_norm;

  for (int j = 0; j < k; ++j) {
    StateVector w = jacobian_vector_product(stepper, u_star, phi, f.v.col(j), eps, p);
    // Modified Gram-Schmidt followed by one full reorthogonalization pass.
    for (int pass = 0; pass < 2; ++pass) {
      for (int i = 0; i <= j; ++i) {
        const double c = f.v.col(i).dot(w);
        f.hbar(i, j) += c;
        w -= c * f.v.col(i);
      }
    }
    const double beta = w.norm();
    f.k = j + 1;
    const double scale = f.hbar.topLeftCorner(j + 1, j + 1).norm();
    if (beta < 1e-12 * std::max(scale, 1e-300)) {
      f.hbar(j + 1, j) = 0.0;
      f.breakdown = true;
      break;
    }
    f.hbar(j + 1, j) = beta;
    f.v.col(j + 1) = w / beta;
  }

  if (f.breakdown) {
    f.v.conservativeResize(Eigen::NoChange, f.k);
    f.hbar.conservativeResize(f.k + 1, f.k);
  }
  return f;
}

namespace {

// Unit eigenvector of h for the (already accurate) eigenvalue mu by inverse
// iteration with a slightly perturbed shift.
Eigen::VectorXcd ritz_vector(const Matrix& h, Complex mu) {
  const Eigen::Index k = h.rows();
  const double scale = std::max(1.0, h.norm());
  const Complex shift = mu + Complex(1e-10 * scale, 1e-10 * scale);
  Eigen::MatrixXcd a = h.cast<Complex>();
  a.diagonal().array() -= shift;
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(a);
  Eigen::VectorXcd x = Eigen::VectorXcd::Ones(k);
  for (int it = 0; it < 3; ++it) {
    x = lu.solve(x);
    const double nx = x.norm();
    if (!(nx > 0.0) || !std::isfinite(nx)) return Eigen::VectorXcd::Unit(k, k - 1);
    x /= nx;
  }
  return x;
}

}  // namespace

std::vector<RitzPair> ritz_pairs(const ArnoldiFactorization& f) {
  std::vector<RitzPair> out;
  if (f.k == 0) return out;
  const Matrix h = f.h();
  const EigenvalueResult ev = hessenberg_eigenvalues(h);
  const double beta = std::abs(f.hbar(f.k, f.k - 1));
  for (const Complex& mu : ev.values) {
    RitzPair rp;
    rp.value = mu;
    if (beta == 0.0) {
      rp.residual = 0.0;
    } else {
      const Eigen::VectorXcd s = ritz_vector(h, mu);
      rp.residual = beta * std::abs(s[f.k - 1]);
    }
    out.push_back(rp);
  }
  int tag = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (i > 0 && std::abs(out[i].value - out[i - 1].value) <= 1e-6 * std::max(1.0, std::abs(out[i].value))) {
      out[i].cluster = out[i - 1].cluster;
    } else {
      out[i].cluster = tag++;
    }
  }
  return out;
}

FloquetResult floquet_multipliers(const Timestepper& stepper, const StateVector& u_star,
                                  const Parameters& p, int k, const FloquetOptions& opts) {
  FloquetResult out;
  out.factorization = arnoldi_factorize(stepper, u_star, p, k, opts.start, opts.eps);
  out.pairs = ritz_pairs(out.factorization);
  out.stable = std::all_of(out.pairs.begin(), out.pairs.end(), [&](const RitzPair& rp) {
    return std::abs(rp.value) < 1.0 - opts.stability_margin;
  });
  return out;
}

}  // namespace tskit
