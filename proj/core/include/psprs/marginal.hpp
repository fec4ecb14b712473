#pragma once

#include <string>
#include <vector>

#include "psprs/ancova.hpp"
#include "psprs/dataset.hpp"
#include "psprs/linalg.hpp"

namespace psprs {

/// One ANCOVA per item (week-52 item score on baseline item score and arm).
struct MarginalFits {
  std::vector<AncovaFit> per_item;
  Vector t_vector;
  double df_marginal = 0.0;
  std::size_t n_total = 0;
  /// Mean arm size; the per-group n of the O'Brien df rule.
  double n_per_group = 0.0;

  std::vector<double> p_values() const;
};

/// Sandwich (HC0) correlation of the treatment-coefficient estimators.
struct CorrelationEstimate {
  Matrix corr;
  Matrix cov;
  std::string method = "stacked-score sandwich (HC0)";
};

/// No small-sample factor is applied to the sandwich cross-products.
inline constexpr bool kSandwichSmallSampleCorrection = false;

/// Throws SingularDesignError naming the item when a per-item design is
/// singular.
MarginalFits fit_marginals(const ItemDataset& data);

/// Cov(b_j, b_k) = A_j^-1 B_jk A_k^-1 restricted to the treatment entry, with
/// B_jk = sum_i x_ij x_ik' r_ij r_ik. The treatment entry reduces to
/// sum_i h_ij r_ij h_ik r_ik, h_j being the treatment row of (X_j'X_j)^-1 X_j'
/// (AncovaFit::treatment_weights). Throws InputError when the fits do not
/// match the data.
CorrelationEstimate estimate_corr(const ItemDataset& data, const MarginalFits& fits);

}  // namespace psprs
