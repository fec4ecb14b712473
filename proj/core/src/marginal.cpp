#include "psprs/marginal.hpp"

#include <cmath>
#include <string>

#include "psprs/error.hpp"

namespace psprs {

std::vector<double> MarginalFits::p_values() const {
  std::vector<double> p;
  p.reserve(per_item.size());
  for (const auto& f : per_item) p.push_back(f.p_one_sided);
  return p;
}

MarginalFits fit_marginals(const ItemDataset& data) {
  MarginalFits out;
  out.per_item.reserve(kItemCount);
  out.t_vector.resize(kItemCount);
  std::vector<double> y(data.size()), x(data.size());
  for (std::size_t k = 0; k < kItemCount; ++k) {
    for (std::size_t i = 0; i < data.size(); ++i) {
      y[i] = data.week52[i][k];
      x[i] = data.baseline[i][k];
    }
    try {
      out.per_item.push_back(fit_ancova(y, x, data.arm));
    } catch (const SingularDesignError& e) {
      throw SingularDesignError("item " + std::string(kItemColumns[k]) + " (" + std::string(kItemAbbreviations[k]) +
                                "): " + e.what());
    }
    out.t_vector(static_cast<Eigen::Index>(k)) = out.per_item.back().t_value;
  }
  out.df_marginal = out.per_item.front().df;
  out.n_total = data.size();
  out.n_per_group = 0.5 * static_cast<double>(data.size());
  return out;
}

CorrelationEstimate estimate_corr(const ItemDataset& data, const MarginalFits& fits) {
  const std::size_t n = data.size();
  const std::size_t m = fits.per_item.size();
  if (m == 0) throw InputError("estimate_corr: no marginal fits");
  for (const auto& f : fits.per_item) {
    if (f.residuals.size() != n || f.treatment_weights.size() != n) {
      throw InputError("estimate_corr: fits were computed on a different dataset");
    }
  }
  // Influence of subject i on item j's treatment coefficient.
  Matrix u(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  for (std::size_t j = 0; j < m; ++j) {
    const auto& f = fits.per_item[j];
    for (std::size_t i = 0; i < n; ++i) {
      u(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = f.treatment_weights[i] * f.residuals[i];
    }
  }
  CorrelationEstimate est;
  est.cov = u.transpose() * u;
  // The blocked product is not exactly symmetric; mirror the upper triangle.
  est.cov.triangularView<Eigen::StrictlyLower>() = est.cov.transpose();
  const auto mm = static_cast<Eigen::Index>(m);
  est.corr.resize(mm, mm);
  for (Eigen::Index a = 0; a < mm; ++a) {
    est.corr(a, a) = 1.0;
    for (Eigen::Index b = a + 1; b < mm; ++b) {
      const double denom = std::sqrt(est.cov(a, a) * est.cov(b, b));
      est.corr(a, b) = est.corr(b, a) = denom > 0 ? est.cov(a, b) / denom : 0.0;
    }
  }
  return est;
}

}  // namespace psprs
