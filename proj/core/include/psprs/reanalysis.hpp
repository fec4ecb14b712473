#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "psprs/grm.hpp"
#include "psprs/grm_fit.hpp"
#include "psprs/latent_approx.hpp"
#include "psprs/omnibus.hpp"
#include "psprs/procedures.hpp"
#include "psprs/scoring.hpp"
#include "psprs/trial_csv.hpp"

namespace psprs {

struct Comparison {
  std::string treatment;
  std::string control;
  std::string label() const { return treatment + " vs " + control; }
};

struct DescriptiveRow {
  std::string item;
  std::string arm;
  std::size_t n = 0;
  double baseline_mean = 0.0;
  double baseline_se = 0.0;
  double week52_mean = 0.0;
  double week52_se = 0.0;
  double change_mean = 0.0;
  double change_se = 0.0;
  /// ANCOVA against the control arm; only on treatment rows.
  std::optional<double> ancova_coef;
  std::optional<double> ancova_se;
  std::optional<double> ancova_p;
};

/// Per item (and the sum score, labelled "SumS"), one control and one
/// treatment row: means and standard errors (sample sd / sqrt(n)) at both
/// visits and of the within-subject change, plus the ANCOVA treatment effect
/// on the treatment row.
std::vector<DescriptiveRow> descriptive_table(const ItemDataset& data, const std::string& treatment_label,
                                              const std::string& control_label);

struct ReanalysisOptions {
  std::vector<ScoringScheme> schemes = {ScoringScheme::original(), ScoringScheme::fda_default()};
  /// Externally fitted models and approximations, matched by scheme name.
  std::vector<GrModel> models;
  std::vector<LinearLatentApprox> approxes;
  /// Fit missing models on the analysed data (pooled arms and visits).
  bool allow_self_fit = true;
  std::shared_ptr<const OmnibusCalibration> omnibus_items;
  std::shared_ptr<const OmnibusCalibration> omnibus_domains;
  MvnOptions maxt;
  std::uint64_t seed = 1;
  std::vector<Method> methods{kAllMethods.begin(), kAllMethods.end()};
  GrFitOptions grm;
};

struct MethodResult {
  std::string comparison;
  std::string scheme;
  std::string method;
  double statistic = 0.0;
  /// NaN when the method failed (see error).
  double p_value = 0.0;
  std::string error;
  /// The failure was numerical (singular design, non-convergence).
  bool numerical = false;
  std::vector<std::string> warnings;
  std::vector<std::string> dropped_items;
};

struct ItemResult {
  std::string comparison;
  std::string scheme;
  std::string item;
  std::string abbreviation;
  double coef = 0.0;
  double se = 0.0;
  double t = 0.0;
  double p = 0.0;
  double holm = 0.0;
  double hommel = 0.0;
  /// GLS weight R^-1 1 (NaN when the GLS fit failed).
  double gls_weight = 0.0;
};

struct ApproxSummary {
  std::string scheme;
  std::string model_source;   ///< "supplied" or "self-fit"
  std::string approx_source;  ///< "supplied" or "self-fit"
  LinearLatentApprox approx;
  /// Correlation of approx_latent with the EAP score over the pooled visits of
  /// the analysed data.
  double corr_with_eap = 0.0;
};

struct ComparisonSummary {
  std::string label;
  std::size_t n_treatment = 0;
  std::size_t n_control = 0;
  CompleteCaseLog log;
};

struct ReanalysisReport {
  std::vector<ComparisonSummary> comparisons;
  /// Descriptive rows per comparison (original scoring of the input).
  std::vector<std::pair<std::string, std::vector<DescriptiveRow>>> descriptives;
  std::vector<MethodResult> methods;
  std::vector<ItemResult> items;
  std::vector<ApproxSummary> approximations;
  std::vector<std::string> notes;
};

/// Runs every method for every comparison and scheme. The trial must be in
/// original scoring. Missing IRT models are self-fitted when allowed (with a
/// bias caveat in notes), otherwise IRT-based methods are reported as failed.
ReanalysisReport run_reanalysis(const TrialData& trial, const std::vector<Comparison>& comparisons,
                                const ReanalysisOptions& options);

}  // namespace psprs
