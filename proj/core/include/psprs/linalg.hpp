#pragma once

#include <Eigen/Dense>

namespace psprs {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Lower-triangular L with L * L^T = s. Only the lower triangle of s is read.
/// Throws FactorizationError carrying the failing pivot index when s is not
/// positive definite.
Matrix cholesky(const Matrix& s);

/// Semi-definite variant used for sampling: zero (or round-off negative)
/// pivots produce a zero column instead of an error. Still throws when a pivot
/// is clearly negative (< -tol * max diagonal).
Matrix cholesky_psd(const Matrix& s, double tol = 1e-10);

struct CorrelationRepair {
  Matrix corr;
  bool repaired = false;
  double min_eigenvalue = 0.0;
};

/// Floors eigenvalues of a correlation matrix at `floor` and rescales back to
/// unit diagonal. Leaves the input untouched when already above the floor.
CorrelationRepair repair_correlation(const Matrix& corr, double floor = 1e-10);

/// Throws InputError unless m is square and symmetric within tol.
void require_symmetric(const Matrix& m, double tol, const char* what);

}  // namespace psprs
