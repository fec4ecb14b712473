#include "psprs/linalg.hpp"

#include <cmath>
#include <string>

#include "psprs/error.hpp"

namespace psprs {

Matrix cholesky(const Matrix& s) {
  if (s.rows() != s.cols()) throw InputError("cholesky: matrix is not square");
  const Eigen::Index n = s.rows();
  Matrix l = Matrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double d = s(j, j);
    for (Eigen::Index k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0)) {
      throw FactorizationError("cholesky: matrix is not positive definite (pivot " + std::to_string(j) +
                                   " = " + std::to_string(d) + ")",
                               static_cast<std::size_t>(j));
    }
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      double v = s(i, j);
      for (Eigen::Index k = 0; k < j; ++k) v -= l(i, k) * l(j, k);
      l(i, j) = v / ljj;
    }
  }
  return l;
}

Matrix cholesky_psd(const Matrix& s, double tol) {
  if (s.rows() != s.cols()) throw InputError("cholesky_psd: matrix is not square");
  const Eigen::Index n = s.rows();
  const double scale = n > 0 ? s.diagonal().cwiseAbs().maxCoeff() : 0.0;
  Matrix l = Matrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double d = s(j, j);
    for (Eigen::Index k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (d <= tol * scale) {
      if (d < -tol * scale) {
        throw FactorizationError("cholesky_psd: matrix is not positive semi-definite (pivot " +
                                     std::to_string(j) + ")",
                                 static_cast<std::size_t>(j));
      }
      continue;
    }
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      double v = s(i, j);
      for (Eigen::Index k = 0; k < j; ++k) v -= l(i, k) * l(j, k);
      l(i, j) = v / ljj;
    }
  }
  return l;
}

CorrelationRepair repair_correlation(const Matrix& corr, double floor) {
  CorrelationRepair out;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(corr);
  if (eig.info() != Eigen::Success) throw NumericalError("repair_correlation: eigen decomposition failed");
  out.min_eigenvalue = eig.eigenvalues().minCoeff();
  if (out.min_eigenvalue >= floor) {
    out.corr = corr;
    return out;
  }
  Vector lambda = eig.eigenvalues().cwiseMax(floor);
  Matrix fixed = eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().transpose();
  Vector inv_sd = fixed.diagonal().cwiseSqrt().cwiseInverse();
  out.corr = inv_sd.asDiagonal() * fixed * inv_sd.asDiagonal();
  out.corr.diagonal().setOnes();
  out.repaired = true;
  return out;
}

void require_symmetric(const Matrix& m, double tol, const char* what) {
  if (m.rows() != m.cols()) throw InputError(std::string(what) + ": matrix is not square");
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      if (std::fabs(m(i, j) - m(j, i)) > tol) throw InputError(std::string(what) + ": matrix is not symmetric");
    }
  }
}

}  // namespace psprs
