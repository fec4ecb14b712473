#pragma once

#include <cstddef>

#include "psprs/linalg.hpp"
#include "psprs/rng.hpp"

namespace psprs {

/// Multivariate normal with a cached (semi-definite) Cholesky factor.
class MvnSpec {
 public:
  /// Validates symmetry (1e-12) and non-negative diagonal, then factorizes.
  /// Throws InputError / FactorizationError.
  MvnSpec(Vector mean, Matrix covariance);

  const Vector& mean() const noexcept { return mean_; }
  const Matrix& covariance() const noexcept { return covariance_; }
  const Matrix& chol() const noexcept { return chol_; }
  Eigen::Index dim() const noexcept { return mean_.size(); }

 private:
  Vector mean_;
  Matrix covariance_;
  Matrix chol_;
};

/// n x k matrix whose rows are independent draws from spec.
Matrix sample_mvn(const MvnSpec& spec, std::size_t n, RngStream& rng);

struct MvnOptions {
  double tol = 1e-4;
  /// Integrand evaluations allowed before giving up on tol.
  std::size_t max_evaluations = 2'000'000;
  /// Independent random shifts used for the error estimate.
  int shifts = 10;
};

struct MvnProbability {
  double value = 0.0;
  /// Three standard errors over the random shifts.
  double error = 0.0;
  std::size_t evaluations = 0;
  bool converged = true;
  /// Correlation needed an eigenvalue floor before factorization.
  bool repaired = false;
};

/// P(Z <= upper) componentwise for Z ~ N(0, corr).
///
/// Sequential conditioning after Genz-Bretz variable reordering, integrated
/// with a randomly shifted, tent-transformed Richtmyer lattice and antithetic
/// pairs. Entries of `upper` may be +-infinity. Throws InputError when corr is
/// not a correlation matrix, k > 32, or tol is outside (0, 0.01].
MvnProbability mvn_rect_upper(const Vector& upper, const Matrix& corr, const MvnOptions& options, RngStream& rng);

}  // namespace psprs
