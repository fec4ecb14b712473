#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "psprs/dataset.hpp"
#include "psprs/generators.hpp"
#include "psprs/rng.hpp"

namespace psprs {

/// Synthetic stand-in for a pooled trial dataset: a one-factor Gaussian
/// model per visit, discretized to 0..4, with the per-item continuous mean
/// and scale solved so the discretized mean and SD hit the targets.
///
/// Latent structure for item k at visit v: Z_kv = l F_v + sqrt(1 - l^2) E_kv,
/// corr(F_0, F_1) = visit_corr, corr(E_k0, E_k1) = residual_corr, all other
/// pairs independent.
struct ReferenceConfig {
  std::size_t n_subjects = 380;
  double loading = 0.7;
  double visit_corr = 0.85;
  double residual_corr = 0.45;
  std::array<double, kItemCount> baseline_mean = {0.636, 1.582, 2.228, 1.568, 1.091, 1.661, 2.107, 1.914, 2.146, 1.701};
  std::array<double, kItemCount> baseline_sd = {0.62, 0.85, 1.07, 0.80, 0.93, 0.87, 1.25, 0.89, 1.11, 0.90};
  std::array<double, kItemCount> week52_mean = {0.886, 2.257, 2.643, 2.003, 1.502, 2.080, 2.886, 2.514, 2.844, 2.454};
  std::array<double, kItemCount> week52_sd = {0.78, 1.02, 1.24, 0.92, 1.15, 1.05, 1.28, 0.92, 1.11, 1.10};
  std::uint64_t seed = 8012;

  /// Throws ConfigError on out-of-range values or unreachable targets.
  void validate() const;
};

ReferenceConfig load_reference_config(const std::string& path);
ReferenceConfig reference_config_from_json(const std::string& text);
std::string reference_config_to_json(const ReferenceConfig& config);

/// Continuous (mean, sd) whose rounded-and-clamped version has the target
/// discrete mean and SD. Throws ConfigError when no such pair exists.
struct DiscreteCalibration {
  double mu = 0.0;
  double sigma = 1.0;
};
DiscreteCalibration calibrate_discretization(double target_mean, double target_sd);

/// Exact mean and SD of discretize_score(mu + sigma Z).
std::pair<double, double> discretized_moments(double mu, double sigma);

/// Mean vector and correlation-scaled covariance of the continuous 20-dim
/// normal implied by the configuration.
DiscretizedMvnParams reference_latent_params(const ReferenceConfig& config);

/// Draws the pool with RngStream(config.seed). Arms alternate control /
/// treatment; they carry no effect.
ItemDataset build_synthetic_reference(const ReferenceConfig& config);
ItemDataset build_synthetic_reference(const ReferenceConfig& config, RngStream& rng);

/// Sample mean and (n - 1)-divisor covariance of (baseline, week-52) scores.
DiscretizedMvnParams estimate_mvn_params(const ItemDataset& pool);

}  // namespace psprs
