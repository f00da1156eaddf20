#pragma once

#include <complex>
#include <vector>

#include "tskit/timestepper.hpp"

namespace tskit {

using Complex = std::complex<double>;

struct EigenvalueResult {
  /// Sorted by descending modulus, then descending imaginary part.
  std::vector<Complex> values;
  /// False when the sweep budget (100 * m) ran out; `values` then holds the
  /// converged eigenvalues followed by diagonal estimates for the rest.
  bool converged = true;
  int converged_count = 0;
  int sweeps = 0;
};

/// All eigenvalues of a real upper-Hessenberg matrix by Francis double-shift
/// QR. Conjugate pairs come out of 2x2 real-Schur blocks and are exact
/// mirrors of each other.
EigenvalueResult hessenberg_eigenvalues(const Matrix& h);

/// Eigenvalues of a general real square matrix: Householder reduction to
/// Hessenberg form followed by `hessenberg_eigenvalues`.
EigenvalueResult dense_eigenvalues(const Matrix& a);

/// Ordering used throughout: |z| descending, then Im z descending.
void sort_by_modulus(std::vector<Complex>& values);

bool is_upper_hessenberg(const Matrix& h, double tol = 0.0);

/// Orthonormalizes `v` against the columns of `basis` (two Gram-Schmidt
/// passes). Returns the norm of the residual before normalization; `v` is
/// left normalized unless that norm is zero.
double orthogonalize_against(const Matrix& basis, StateVector& v);

/// Appends the columns of `extra` to `basis`, dropping any column whose
/// component outside the current span falls below `drop_tol` relative to
/// its own norm. Returns the number of columns appended.
int append_orthonormal(Matrix& basis, const Matrix& extra, double drop_tol = 1e-10);

/// max |Z^T Z - I|.
double orthonormality_error(const Matrix& z);

}  // namespace tskit
