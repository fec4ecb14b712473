#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "psprs/items.hpp"

namespace psprs {

/// Weighted-sum approximation of the latent trait:
/// logit(intercept + sum_k w_k y_k), fitted on the logistic scale.
struct LinearLatentApprox {
  double intercept = 0.0;
  std::array<double, kItemCount> weights{};
  double r_squared = 0.0;
  std::string scheme = "original";

  /// Weights divided by their sum (reporting view only).
  std::array<double, kItemCount> normalized_weights() const;
};

/// Clamp bound for the weighted sum before the logit back-transform.
inline constexpr double kApproxClamp = 1e-6;

/// Least squares of logistic(theta) on the ten item scores plus intercept.
/// Throws InputError on length mismatch, SingularDesignError on rank
/// deficiency.
LinearLatentApprox fit_linear_latent_approx(std::span<const ItemScores> rows, std::span<const double> thetas,
                                            const std::string& scheme = "original");

/// u = intercept + w'y clamped to [1e-6, 1 - 1e-6], returned as logit(u).
double approx_latent(const LinearLatentApprox& approx, const ItemScores& responses);

}  // namespace psprs
