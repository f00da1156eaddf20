#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/LU>
#include <Eigen/QR>

#include "tskit/linalg.hpp"
#include "tskit/models.hpp"

namespace tskit {

namespace {

Matrix seeded_orthogonal(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix g(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) g(i, j) = gauss(rng);
  }
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(n, n);
  // Fix column signs so the factor is unique for a given Gaussian draw.
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < n; ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  return q;
}

}  // namespace

LinearMapModel::LinearMapModel(LinearMapSpec spec) : spec_(std::move(spec)) {
  const auto n_real = static_cast<Eigen::Index>(spec_.real_eigenvalues.size());
  const auto n = n_real + 2 * static_cast<Eigen::Index>(spec_.complex_pairs.size());
  if (n == 0) throw InvalidArgument("linear_map: empty spectrum");
  for (double v : spec_.real_eigenvalues) {
    if (!std::isfinite(v)) throw InvalidArgument("linear_map: non-finite eigenvalue");
  }

  Matrix d = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n_real; ++i) d(i, i) = spec_.real_eigenvalues[static_cast<std::size_t>(i)];
  Eigen::Index at = n_real;
  for (const auto& [r, theta] : spec_.complex_pairs) {
    if (!std::isfinite(r) || !std::isfinite(theta)) throw InvalidArgument("linear_map: non-finite pair");
    d(at, at) = r * std::cos(theta);
    d(at, at + 1) = -r * std::sin(theta);
    d(at + 1, at) = r * std::sin(theta);
    d(at + 1, at + 1) = r * std::cos(theta);
    at += 2;
  }

  Matrix q = Matrix::Identity(n, n);
  if (spec_.conjugation_seed) q = seeded_orthogonal(n, *spec_.conjugation_seed);
  a_ = spec_.conjugation_seed ? Matrix(q * d * q.transpose()) : d;

  if (spec_.lambda_slot) {
    const int slot = *spec_.lambda_slot;
    if (slot < 0 || slot >= n_real) {
      throw InvalidArgument("linear_map: lambda_slot must index a real eigenvalue");
    }
    slot_direction_ = q.col(slot);
    slot_base_ = spec_.real_eigenvalues[static_cast<std::size_t>(slot)];
  }

  if (spec_.offset && spec_.fixed_point) {
    throw InvalidArgument("linear_map: give either offset or fixed_point, not both");
  }
  if (spec_.offset) {
    if (spec_.offset->size() != n) throw DimensionMismatch("linear_map: offset dimension mismatch");
    b_ = *spec_.offset;
  } else if (spec_.fixed_point) {
    if (spec_.fixed_point->size() != n) throw DimensionMismatch("linear_map: fixed_point dimension mismatch");
    b_ = (Matrix::Identity(n, n) - a_) * *spec_.fixed_point;
  } else {
    b_ = StateVector::Zero(n);
  }
}

LinearMapModel LinearMapModel::diagonal(std::vector<double> eigenvalues, StateVector offset) {
  LinearMapSpec spec;
  spec.real_eigenvalues = std::move(eigenvalues);
  spec.offset = std::move(offset);
  return LinearMapModel(std::move(spec));
}

Parameters LinearMapModel::default_parameters() const {
  if (!spec_.lambda_slot) return {};
  return Parameters({{"lambda", slot_base_}}, "lambda");
}

Matrix LinearMapModel::matrix(const Parameters& p) const {
  if (!spec_.lambda_slot || !p.contains("lambda")) return a_;
  const double shift = p.get("lambda") - slot_base_;
  return a_ + shift * slot_direction_ * slot_direction_.transpose();
}

std::vector<std::complex<double>> LinearMapModel::prescribed_spectrum(const Parameters& p) const {
  std::vector<std::complex<double>> out;
  for (std::size_t i = 0; i < spec_.real_eigenvalues.size(); ++i) {
    double v = spec_.real_eigenvalues[i];
    if (spec_.lambda_slot && static_cast<std::size_t>(*spec_.lambda_slot) == i && p.contains("lambda")) {
      v = p.get("lambda");
    }
    out.emplace_back(v, 0.0);
  }
  for (const auto& [r, theta] : spec_.complex_pairs) {
    out.push_back(std::polar(r, theta));
    out.push_back(std::polar(r, -theta));
  }
  sort_by_modulus(out);
  return out;
}

StateVector LinearMapModel::fixed_point(const Parameters& p) const {
  const Matrix a = matrix(p);
  const Matrix m = Matrix::Identity(a.rows(), a.cols()) - a;
  Eigen::FullPivLU<Matrix> lu(m);
  if (!lu.isInvertible()) throw InvalidArgument("linear_map: 1 is an eigenvalue, no unique fixed point");
  return lu.solve(b_);
}

StateVector LinearMapModel::step(const StateVector& u, const Parameters& p) const {
  if (spec_.lambda_slot && p.contains("lambda")) {
    const double shift = p.get("lambda") - slot_base_;
    return a_ * u + b_ + (shift * slot_direction_.dot(u)) * slot_direction_;
  }
  return a_ * u + b_;
}

// ---------------------------------------------------------------------------

QuadraticMap::QuadraticMap(std::size_t dim, double lambda) : dim_(dim), lambda_(lambda) {
  if (dim_ == 0) throw InvalidArgument("quadratic_map: dimension must be >= 1");
}

Parameters QuadraticMap::default_parameters() const { return Parameters({{"lambda", lambda_}}, "lambda"); }

StateVector QuadraticMap::step(const StateVector& u, const Parameters& p) const {
  const double lambda = p.contains("lambda") ? p.get("lambda") : lambda_;
  return (u.array() * u.array() + lambda).matrix();
}

}  // namespace tskit
