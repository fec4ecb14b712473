#pragma once

namespace psprs {

double normal_pdf(double x) noexcept;

/// Standard normal CDF. Accepts +-infinity.
double normal_cdf(double x) noexcept;

/// Inverse standard normal CDF (Wichura AS241, about 1e-16 relative).
/// Throws DomainError unless 0 < p < 1.
double normal_quantile(double p);

/// Student t CDF for real-valued df > 0, through the regularized incomplete
/// beta function. Throws DomainError for df <= 0 or NaN input.
double student_t_cdf(double x, double df);

/// Standard logistic function and its inverse.
double logistic(double x) noexcept;
double logit(double u) noexcept;

}  // namespace psprs
