#include "psprs/latent_approx.hpp"

#include <algorithm>
#include <cmath>

#include "psprs/distributions.hpp"
#include "psprs/error.hpp"
#include "psprs/linalg.hpp"

namespace psprs {

std::array<double, kItemCount> LinearLatentApprox::normalized_weights() const {
  double total = 0.0;
  for (double w : weights) total += w;
  std::array<double, kItemCount> out{};
  for (std::size_t k = 0; k < kItemCount; ++k) out[k] = total != 0.0 ? weights[k] / total : 0.0;
  return out;
}

LinearLatentApprox fit_linear_latent_approx(std::span<const ItemScores> rows, std::span<const double> thetas,
                                            const std::string& scheme) {
  if (rows.size() != thetas.size()) throw InputError("fit_linear_latent_approx: rows and thetas differ in length");
  const auto n = static_cast<Eigen::Index>(rows.size());
  constexpr auto p = static_cast<Eigen::Index>(kItemCount + 1);
  if (n <= p) throw InputError("fit_linear_latent_approx: need more rows than coefficients");
  Matrix x(n, p);
  Vector y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    x(i, 0) = 1.0;
    for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(kItemCount); ++k) {
      x(i, k + 1) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
    }
    y(i) = logistic(thetas[static_cast<std::size_t>(i)]);
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(x);
  qr.setThreshold(1e-10);
  if (qr.rank() < p) throw SingularDesignError("fit_linear_latent_approx: item design is rank deficient");
  const Vector beta = qr.solve(y);

  LinearLatentApprox out;
  out.scheme = scheme;
  out.intercept = beta(0);
  for (std::size_t k = 0; k < kItemCount; ++k) out.weights[k] = beta(static_cast<Eigen::Index>(k + 1));
  const Vector resid = y - x * beta;
  const double tss = (y.array() - y.mean()).square().sum();
  out.r_squared = tss > 0 ? 1.0 - resid.squaredNorm() / tss : 1.0;
  return out;
}

double approx_latent(const LinearLatentApprox& approx, const ItemScores& responses) {
  double u = approx.intercept;
  for (std::size_t k = 0; k < kItemCount; ++k) u += approx.weights[k] * responses[k];
  u = std::clamp(u, kApproxClamp, 1.0 - kApproxClamp);
  return logit(u);
}

}  // namespace psprs
