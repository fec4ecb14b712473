#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "psprs/dataset.hpp"
#include "psprs/grm.hpp"
#include "psprs/linalg.hpp"
#include "psprs/mvnorm.hpp"
#include "psprs/rng.hpp"

namespace psprs {

/// Either absolute week-52 item shifts d (score units) or a latent slope
/// ratio rho.
struct EffectScenario {
  enum class Kind { kItemShift, kSlopeRatio };

  Kind kind = Kind::kItemShift;
  std::string label = "null";
  std::array<double, kItemCount> d{};
  double rho = 1.0;

  bool is_null() const;
  /// Throws InputError for negative shifts or rho outside (0, 1]. rho = 0 is
  /// accepted only when allow_zero_rho is set (used to check the latent
  /// bookkeeping).
  void validate(bool allow_zero_rho = false) const;

  static EffectScenario item_shift(std::string label, const std::array<double, kItemCount>& d);
  static EffectScenario slope_ratio(double rho);
  /// "null", "d1" ... "d12", or "rho=<value>".
  static EffectScenario builtin(const std::string& label);
};

/// Labels of the twelve built-in item-shift scenarios.
std::vector<std::string> builtin_shift_labels();
/// 0.45, 0.50, ..., 0.75.
std::vector<double> default_rho_grid();

/// 20-dimensional normal on (baseline items, week-52 items).
struct DiscretizedMvnParams {
  Vector mean20 = Vector::Zero(20);
  Matrix cov20 = Matrix::Identity(20, 20);

  /// Throws InputError on wrong sizes, asymmetry or a non-PSD covariance.
  MvnSpec spec() const;
};

/// Round half away from zero, then clamp to [0, 4].
int discretize_score(double x) noexcept;

/// Control rows from N(mean20, cov20), treatment rows from the same normal
/// with d subtracted from the week-52 coordinates; every coordinate is then
/// discretized. Controls come first. Requires n >= 2.
ItemDataset gen_discretized_mvn(const MvnSpec& spec, const EffectScenario& scenario, std::size_t n, RngStream& rng);
ItemDataset gen_discretized_mvn(const DiscretizedMvnParams& params, const EffectScenario& scenario, std::size_t n,
                                RngStream& rng);

/// The effect step for one item over the treated arm: subtract floor(d) from
/// every score, one more from the listed positions, then clamp at 0.
/// `pre_clamp` (optional) receives the scores before clamping.
void inject_item_effect(std::span<int> scores, double d, std::span<const std::size_t> selected,
                        std::vector<int>* pre_clamp = nullptr);

/// Number of treated subjects receiving the extra unit: round(n (d - floor d)).
std::size_t extra_unit_count(double d, std::size_t n);

/// Bookkeeping of one bootstrap draw, for checking the effect injection.
struct BootstrapTrace {
  std::vector<std::size_t> pool_indices;                      ///< controls then treated
  std::array<std::vector<std::size_t>, kItemCount> selected;  ///< treated-local indices
  std::array<std::vector<int>, kItemCount> pre_clamp;         ///< treated week-52 before clamping
  std::array<std::vector<int>, kItemCount> original;          ///< treated week-52 before the effect
};

/// Draws 2n subjects from the pool (without replacement unless `replace`),
/// the first n as controls, and injects the item shifts into the treated
/// week-52 scores. The pool must be in original scoring. Throws InputError
/// when the pool is smaller than 2n without replacement.
ItemDataset gen_bootstrap(const ItemDataset& pool, const EffectScenario& scenario, std::size_t n, RngStream& rng,
                          bool replace = false, BootstrapTrace* trace = nullptr);

/// Linear latent progression psi(t) = psi(0) + s t with slope truncated at 0.
struct IrtPopulationParams {
  double intercept_mean = -0.5;
  double intercept_sd = 1.0;
  double slope_mean = 0.7;
  double slope_sd = 0.3;
  double horizon_years = 1.0;

  void validate() const;
};

/// Latent values of one generated subject, for bookkeeping checks.
struct LatentPath {
  double baseline = 0.0;
  double week52 = 0.0;
};

/// Per subject: psi(0) and s drawn from the population; week-52 latent is
/// psi(0) + s h for controls and psi(0) + rho s h for treated; items are
/// sampled from the graded-response model at each latent value. The model
/// must be fitted on original scores.
ItemDataset gen_irt_longitudinal(const IrtPopulationParams& pop, const GrModel& model, double rho, std::size_t n,
                                 RngStream& rng, std::vector<LatentPath>* latent = nullptr);

/// Samples one raw score from the item's category distribution at theta.
int sample_grm_item(const GrItemParams& item, double theta, RngStream& rng);

}  // namespace psprs
