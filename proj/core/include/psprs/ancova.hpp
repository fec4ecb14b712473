#pragma once

#include <span>
#include <vector>

#include "psprs/items.hpp"

namespace psprs {

/// Result of regressing an outcome on (intercept, baseline, treatment).
///
/// Lower scores mean benefit, so p_one_sided is the lower-tail t probability:
/// a negative treatment coefficient gives a small p.
struct AncovaFit {
  double coef_intercept = 0.0;
  double coef_baseline = 0.0;
  double coef_treatment = 0.0;
  double se = 0.0;
  double t_value = 0.0;
  double df = 0.0;
  double p_one_sided = 0.5;
  std::vector<double> residuals;
  /// h with coef_treatment = sum_i h_i * y_i, i.e. the treatment row of
  /// (X'X)^-1 X'. Used for sandwich cross-covariances.
  std::vector<double> treatment_weights;
  /// True when the residual sum of squares is zero; se is then 0 and t is 0
  /// or +-infinity depending on the sign of the coefficient.
  bool perfect_fit = false;
};

/// Least-squares ANCOVA fit with design columns (1, baseline, treatment).
///
/// The two-group structure is exploited: projecting onto (1, treatment) is a
/// subtraction of arm means, so the fit is an exact Gram-Schmidt QR of the
/// design with the baseline column orthogonalised last. Throws InputError for
/// unequal lengths, fewer than 4 rows or a missing arm; SingularDesignError
/// when the baseline is constant within both arms.
AncovaFit fit_ancova(std::span<const double> outcome, std::span<const double> baseline, std::span<const Arm> arm);

/// Degrees of freedom of the O'Brien OLS/GLS statistics:
/// 0.5 * (2n - 3) * (1 + 1/m^2) with n the per-group size.
double obrien_df(double n_per_group, std::size_t m);

}  // namespace psprs
