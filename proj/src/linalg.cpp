#include "tskit/linalg.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

namespace tskit {

namespace {

double sign_of(double magnitude, double s) { return s >= 0.0 ? std::abs(magnitude) : -std::abs(magnitude); }

}  // namespace

void sort_by_modulus(std::vector<Complex>& values) {
  std::stable_sort(values.begin(), values.end(), [](const Complex& a, const Complex& b) {
    const double ma = std::abs(a);
    const double mb = std::abs(b);
    if (ma != mb) return ma > mb;
    return a.imag() > b.imag();
  });
}

bool is_upper_hessenberg(const Matrix& h, double tol) {
  if (h.rows() != h.cols()) return false;
  for (Eigen::Index j = 0; j < h.cols(); ++j) {
    for (Eigen::Index i = j + 2; i < h.rows(); ++i) {
      if (std::abs(h(i, j)) > tol) return false;
    }
  }
  return true;
}

// Eigenvalue-only Francis double-shift QR on the active window [l, hi].
// Deflation uses the classical "negligible subdiagonal" test relative to the
// neighbouring diagonal entries; exceptional shifts are applied every tenth
// sweep without deflation.
EigenvalueResult hessenberg_eigenvalues(const Matrix& h) {
  if (h.rows() != h.cols() || h.rows() < 1) {
    throw InvalidArgument("hessenberg_eigenvalues: need a non-empty square matrix");
  }
  if (!is_upper_hessenberg(h)) {
    throw InvalidArgument("hessenberg_eigenvalues: matrix is not upper Hessenberg");
  }
  const int n = static_cast<int>(h.rows());
  Matrix a = h;

  double anorm = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = std::max(i - 1, 0); j < n; ++j) anorm += std::abs(a(i, j));
  }

  std::vector<Complex> found;
  found.reserve(n);
  EigenvalueResult result;
  const int sweep_budget = 100 * n;

  int hi = n - 1;
  int its = 0;
  double shift_total = 0.0;
  while (hi >= 0) {
    int l = hi;
    for (; l >= 1; --l) {
      double s = std::abs(a(l - 1, l - 1)) + std::abs(a(l, l));
      if (s == 0.0) s = anorm;
      if (std::abs(a(l, l - 1)) + s == s) {
        a(l, l - 1) = 0.0;
        break;
      }
    }
    double x = a(hi, hi);
    if (l == hi) {
      found.emplace_back(x + shift_total, 0.0);
      --hi;
      its = 0;
      continue;
    }
    double y = a(hi - 1, hi - 1);
    double w = a(hi, hi - 1) * a(hi - 1, hi);
    if (l == hi - 1) {
      const double p = 0.5 * (y - x);
      const double q = p * p + w;
      double z = std::sqrt(std::abs(q));
      x += shift_total;
      if (q >= 0.0) {
        z = p + sign_of(z, p);
        const double first = x + z;
        const double second = (z != 0.0) ? x - w / z : first;
        found.emplace_back(first, 0.0);
        found.emplace_back(second, 0.0);
      } else {
        found.emplace_back(x + p, z);
        found.emplace_back(x + p, -z);
      }
      hi -= 2;
      its = 0;
      continue;
    }

    if (result.sweeps >= sweep_budget) {
      result.converged = false;
      break;
    }
    if (its > 0 && its % 10 == 0) {
      shift_total += x;
      for (int i = 0; i <= hi; ++i) a(i, i) -= x;
      const double s = std::abs(a(hi, hi - 1)) + std::abs(a(hi - 1, hi - 2));
      x = y = 0.75 * s;
      w = -0.4375 * s * s;
    }
    ++its;
    ++result.sweeps;

    // Look for two consecutive small subdiagonal elements.
    int m = hi - 2;
    double p = 0.0, q = 0.0, r = 0.0, z = 0.0;
    for (; m >= l; --m) {
      z = a(m, m);
      r = x - z;
      double s = y - z;
      p = (r * s - w) / a(m + 1, m) + a(m, m + 1);
      q = a(m + 1, m + 1) - z - r - s;
      r = a(m + 2, m + 1);
      s = std::abs(p) + std::abs(q) + std::abs(r);
      p /= s;
      q /= s;
      r /= s;
      if (m == l) break;
      const double u = std::abs(a(m, m - 1)) * (std::abs(q) + std::abs(r));
      const double v = std::abs(p) * (std::abs(a(m - 1, m - 1)) + std::abs(z) + std::abs(a(m + 1, m + 1)));
      if (u + v == v) break;
    }
    for (int i = m + 2; i <= hi; ++i) {
      a(i, i - 2) = 0.0;
      if (i != m + 2) a(i, i - 3) = 0.0;
    }

    // Double-shift QR sweep by 3x3 Householder reflectors, chasing the bulge.
    for (int k = m; k <= hi - 1; ++k) {
      if (k != m) {
        p = a(k, k - 1);
        q = a(k + 1, k - 1);
        r = (k != hi - 1) ? a(k + 2, k - 1) : 0.0;
        x = std::abs(p) + std::abs(q) + std::abs(r);
        if (x != 0.0) {
          p /= x;
          q /= x;
          r /= x;
        }
      }
      const double s = sign_of(std::sqrt(p * p + q * q + r * r), p);
      if (s == 0.0) continue;
      if (k == m) {
        if (l != m) a(k, k - 1) = -a(k, k - 1);
      } else {
        a(k, k - 1) = -s * x;
      }
      p += s;
      x = p / s;
      y = q / s;
      z = r / s;
      q /= p;
      r /= p;
      for (int j = k; j <= hi; ++j) {
        double t = a(k, j) + q * a(k + 1, j);
        if (k != hi - 1) {
          t += r * a(k + 2, j);
          a(k + 2, j) -= t * z;
        }
        a(k + 1, j) -= t * y;
        a(k, j) -= t * x;
      }
      const int row_end = std::min(hi, k + 3);
      for (int i = l; i <= row_end; ++i) {
        double t = x * a(i, k) + y * a(i, k + 1);
        if (k != hi - 1) {
          t += z * a(i, k + 2);
          a(i, k + 2) -= t * r;
        }
        a(i, k + 1) -= t * q;
        a(i, k) -= t;
      }
    }
  }

  result.converged_count = static_cast<int>(found.size());
  if (!result.converged) {
    for (int i = hi; i >= 0; --i) found.emplace_back(a(i, i) + shift_total, 0.0);
  }
  sort_by_modulus(found);
  result.values = std::move(found);
  return result;
}

EigenvalueResult dense_eigenvalues(const Matrix& a) {
  if (a.rows() != a.cols() || a.rows() < 1) {
    throw InvalidArgument("dense_eigenvalues: need a non-empty square matrix");
  }
  if (a.rows() <= 2) {
    return hessenberg_eigenvalues(a);
  }
  Eigen::HessenbergDecomposition<Matrix> hess(a);
  Matrix h = hess.matrixH();
  for (Eigen::Index j = 0; j < h.cols(); ++j) {
    for (Eigen::Index i = j + 2; i < h.rows(); ++i) h(i, j) = 0.0;
  }
  return hessenberg_eigenvalues(h);
}

double orthogonalize_against(const Matrix& basis, StateVector& v) {
  for (int pass = 0; pass < 2; ++pass) {
    for (Eigen::Index j = 0; j < basis.cols(); ++j) {
      v -= basis.col(j).dot(v) * basis.col(j);
    }
  }
  const double norm = v.norm();
  if (norm > 0.0) v /= norm;
  return norm;
}

int append_orthonormal(Matrix& basis, const Matrix& extra, double drop_tol) {
  int added = 0;
  for (Eigen::Index j = 0; j < extra.cols(); ++j) {
    StateVector v = extra.col(j);
    const double original = v.norm();
    if (!(original > 0.0)) continue;
    const double remaining = orthogonalize_against(basis, v);
    if (remaining <= drop_tol * original) continue;
    basis.conservativeResize(Eigen::NoChange, basis.cols() + 1);
    basis.col(basis.cols() - 1) = v;
    ++added;
  }
  return added;
}

double orthonormality_error(const Matrix& z) {
  if (z.cols() == 0) return 0.0;
  const Matrix gram = z.transpose() * z;
  return (gram - Matrix::Identity(z.cols(), z.cols())).cwiseAbs().maxCoeff();
}

}  // namespace tskit
