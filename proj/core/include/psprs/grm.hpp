#pragma once

#include <span>
#include <string>
#include <vector>

#include "psprs/items.hpp"
#include "psprs/scoring.hpp"

namespace psprs {

/// Graded-response item: P(Y >= c | theta) = logistic(a * (theta - b_c)).
struct GrItemParams {
  std::string name;
  double discrimination = 1.0;
  /// b_1 < ... < b_{C-1}.
  std::vector<double> thresholds;
  /// Raw score -> model category, filled when unobserved categories were
  /// merged during fitting. Empty means identity.
  std::vector<int> score_map;

  int categories() const { return static_cast<int>(thresholds.size()) + 1; }
  /// Number of raw score levels accepted by the item.
  int raw_categories() const { return score_map.empty() ? categories() : static_cast<int>(score_map.size()); }
  int model_category(int raw) const { return score_map.empty() ? raw : score_map[static_cast<std::size_t>(raw)]; }
  /// Lowest raw score mapped to a model category.
  int raw_score(int category) const;

  /// Throws InputError on a <= 0, non-finite or unordered thresholds.
  void validate() const;
};

struct GrFitMetadata {
  double log_likelihood = 0.0;
  int iterations = 0;
  std::size_t rows = 0;
  bool converged = false;
  int quadrature_nodes = 0;
  std::vector<std::string> notes;
};

/// Ten graded-response items with a fixed N(0,1) latent prior.
struct GrModel {
  std::vector<GrItemParams> items;
  std::string scheme = "original";
  GrFitMetadata fit;

  /// Throws InputError unless there are kItemCount valid items whose raw
  /// category counts match the scheme.
  void validate(const ScoringScheme& s) const;
  void validate() const;
};

/// Category probabilities at theta; sums to 1.
std::vector<double> grm_category_probs(const GrItemParams& item, double theta);

/// Gauss-Hermite rule for integrals against the standard normal density.
struct QuadratureRule {
  std::vector<double> nodes;
  /// Sum to 1.
  std::vector<double> weights;
};

/// n-point rule via Golub-Welsch on the probabilists' Hermite recurrence.
QuadratureRule normal_quadrature(int n);

inline constexpr int kDefaultQuadratureNodes = 201;

/// Posterior-mean scorer with per-node log-probability tables cached.
class EapScorer {
 public:
  explicit EapScorer(GrModel model, int nodes = kDefaultQuadratureNodes);

  const GrModel& model() const noexcept { return model_; }
  const QuadratureRule& rule() const noexcept { return rule_; }

  /// Throws InputError naming the item and value for out-of-range responses.
  double eap(const ItemScores& responses) const;
  std::vector<double> eap(std::span<const ItemScores> rows) const;

 private:
  GrModel model_;
  QuadratureRule rule_;
  // log_prob_[k][c * nodes + q]
  std::vector<std::vector<double>> log_prob_;
};

/// EAP latent trait under the model (201 Gauss-Hermite nodes by default).
double eap_score(const GrModel& model, const ItemScores& responses, int nodes = kDefaultQuadratureNodes);

}  // namespace psprs
