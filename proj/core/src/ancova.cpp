#include "psprs/ancova.hpp"

#include <cmath>
#include <limits>

#include "psprs/distributions.hpp"
#include "psprs/error.hpp"

namespace psprs {

AncovaFit fit_ancova(std::span<const double> outcome, std::span<const double> baseline, std::span<const Arm> arm) {
  const std::size_t n = outcome.size();
  if (baseline.size() != n || arm.size() != n) throw InputError("fit_ancova: outcome, baseline and arm lengths differ");
  if (n < 4) throw InputError("fit_ancova: need at least 4 observations");

  double sum_y[2] = {0, 0}, sum_x[2] = {0, 0};
  std::size_t count[2] = {0, 0};
  for (std::size_t i = 0; i < n; ++i) {
    const int g = static_cast<int>(arm[i]);
    sum_y[g] += outcome[i];
    sum_x[g] += baseline[i];
    ++count[g];
  }
  if (count[0] == 0 || count[1] == 0) throw InputError("fit_ancova: both arms must be present");

  const double mean_y[2] = {sum_y[0] / count[0], sum_y[1] / count[1]};
  const double mean_x[2] = {sum_x[0] / count[0], sum_x[1] / count[1]};

  double sxx = 0, sxy = 0, xx_scale = 0, yy_scale = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const int g = static_cast<int>(arm[i]);
    const double dx = baseline[i] - mean_x[g];
    const double dy = outcome[i] - mean_y[g];
    sxx += dx * dx;
    sxy += dx * dy;
    xx_scale += baseline[i] * baseline[i];
    yy_scale += dy * dy;
  }
  if (!(sxx > 1e-12 * std::max(1.0, xx_scale))) {
    throw SingularDesignError("fit_ancova: design is rank deficient (baseline constant within arms)");
  }

  AncovaFit fit;
  const double slope = sxy / sxx;
  const double gap_x = mean_x[1] - mean_x[0];
  fit.coef_baseline = slope;
  fit.coef_treatment = (mean_y[1] - mean_y[0]) - slope * gap_x;
  fit.coef_intercept = mean_y[0] - slope * mean_x[0];
  fit.df = static_cast<double>(n) - 3.0;

  fit.residuals.resize(n);
  fit.treatment_weights.resize(n);
  double rss = 0, hh = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const int g = static_cast<int>(arm[i]);
    const double dx = baseline[i] - mean_x[g];
    const double r = (outcome[i] - mean_y[g]) - slope * dx;
    fit.residuals[i] = r;
    rss += r * r;
    const double h = (g == 1 ? 1.0 / count[1] : -1.0 / count[0]) - gap_x * dx / sxx;
    fit.treatment_weights[i] = h;
    hh += h * h;
  }

  if (rss <= 1e-24 * std::max(1.0, yy_scale)) {
    fit.perfect_fit = true;
    fit.se = 0.0;
    if (std::fabs(fit.coef_treatment) <= 1e-12) {
      fit.t_value = 0.0;
      fit.p_one_sided = 0.5;
    } else {
      fit.t_value = std::copysign(std::numeric_limits<double>::infinity(), fit.coef_treatment);
      fit.p_one_sided = fit.t_value < 0 ? 0.0 : 1.0;
    }
    return fit;
  }

  fit.se = std::sqrt(rss / fit.df * hh);
  fit.t_value = fit.coef_treatment / fit.se;
  fit.p_one_sided = student_t_cdf(fit.t_value, fit.df);
  return fit;
}

double obrien_df(double n_per_group, std::size_t m) {
  if (m == 0) throw InputError("obrien_df: item count must be positive");
  const double mm = static_cast<double>(m);
  return 0.5 * (2.0 * n_per_group - 3.0) * (1.0 + 1.0 / (mm * mm));
}

}  // namespace psprs
