#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "psprs/dataset.hpp"
#include "psprs/grm.hpp"
#include "psprs/latent_approx.hpp"
#include "psprs/marginal.hpp"
#include "psprs/mvnorm.hpp"
#include "psprs/omnibus.hpp"
#include "psprs/rng.hpp"

namespace psprs {

/// The eleven global testing procedures.
enum class Method {
  kSumScore,
  kIrt,
  kLmApprox,
  kOls,
  kGls,
  kGlsDrop,
  kBonferroni,
  kMaxT,
  kSimes,
  kOmnibus,
  kOmnibusDomains,
};

inline constexpr std::array<Method, 11> kAllMethods = {
    Method::kSumScore,   Method::kIrt,  Method::kLmApprox, Method::kOls,     Method::kGls,           Method::kGlsDrop,
    Method::kBonferroni, Method::kMaxT, Method::kSimes,    Method::kOmnibus, Method::kOmnibusDomains};

/// "SumS", "IRT-PSIF", "LM-PSIBPF", "OLS", "GLS", "GLS-drop", "Bonf", "MaxT",
/// "Simes", "Omnibus", "Omnibus-dom".
std::string_view method_name(Method m);
/// Accepts the names above, case-insensitively. Throws InputError.
Method method_from_name(std::string_view name);

struct TestOutcome {
  std::string method;
  double statistic = 0.0;
  double p_one_sided = 1.0;
  /// Per-item values; their meaning depends on the method (Bonferroni- or
  /// Hommel-adjusted p, or the raw marginal p for Omnibus).
  std::vector<double> per_item_p;
  /// Further named per-item vectors, e.g. {"holm", ...}.
  std::vector<std::pair<std::string, std::vector<double>>> adjusted;
  /// GLS weights R^-1 1 on the items actually used.
  std::vector<double> weights;
  std::vector<std::size_t> dropped_items;
  std::vector<std::pair<std::string, std::string>> diagnostics;
  std::vector<std::string> warnings;

  void note(std::string key, std::string value) { diagnostics.emplace_back(std::move(key), std::move(value)); }
};

/// Marginal ANCOVAs plus the sandwich correlation of their treatment effects.
struct MarginalAnalysis {
  MarginalFits fits;
  CorrelationEstimate corr;
};

MarginalAnalysis analyze_marginals(const ItemDataset& data);

TestOutcome test_sum_score(const ItemDataset& data);

/// EAP scores at both visits, then ANCOVA. Throws InputError when the scorer's
/// model was fitted under a different scheme than the data.
TestOutcome test_irt(const ItemDataset& data, const EapScorer& scorer);

TestOutcome test_lm_approx(const ItemDataset& data, const LinearLatentApprox& approx);

enum class ObrienVariant { kOls, kGls, kGlsDrop };

/// O'Brien-type standardized sums of the marginal t statistics, referred to a
/// t distribution with obrien_df(n, m) degrees of freedom. GLS-drop removes
/// the item with the most negative GLS weight (once) and refits on the rest.
/// Throws SingularDesignError when the correlation matrix cannot be inverted.
TestOutcome test_obrien(const MarginalAnalysis& ma, ObrienVariant variant);

/// Global p = min(1, m min p_i); per_item_p Bonferroni, adjusted {"holm"}.
TestOutcome test_bonferroni(const MarginalFits& fits);

/// Global Simes p; per_item_p are Hommel adjusted values.
TestOutcome test_simes_hommel(const MarginalFits& fits);

TestOutcome test_omnibus(std::span<const double> p, const OmnibusCalibration& calib);

/// Omnibus over the ANCOVA p-values of the three domain sum scores. The
/// calibration must have m = 3.
TestOutcome test_omnibus_domains(const ItemDataset& data, const OmnibusCalibration& calib);

/// z_i = -Phi^-1(F_t(t_i, n - 3)), p = 1 - P(Z <= max z) under N(0, R).
TestOutcome test_maxt(const MarginalAnalysis& ma, const MvnOptions& options, RngStream& rng);

/// Read-only inputs shared by many datasets. Pointers may be null when the
/// corresponding methods are not requested.
struct TestAuxiliaries {
  const EapScorer* scorer = nullptr;
  const LinearLatentApprox* approx = nullptr;
  const OmnibusCalibration* omnibus_items = nullptr;
  const OmnibusCalibration* omnibus_domains = nullptr;
  MvnOptions maxt;
};

struct MethodRun {
  Method method;
  std::optional<TestOutcome> outcome;
  /// Set when the procedure threw; outcome is then empty.
  std::string error;
  /// True for numerical failures, false for input/configuration problems.
  bool numerical = false;
};

/// Runs each method, computing the shared marginal analysis at most once.
/// Exceptions are captured per method. `rng` is only consumed by MaxT.
std::vector<MethodRun> run_methods(const ItemDataset& data, std::span<const Method> methods, const TestAuxiliaries& aux,
                                   RngStream& rng);

}  // namespace psprs
