#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "psprs/items.hpp"
#include "psprs/scoring.hpp"

namespace psprs {

/// Complete-case two-visit item data of a two-arm comparison.
struct ItemDataset {
  std::vector<std::string> ids;
  std::vector<Arm> arm;
  std::vector<ItemScores> baseline;
  std::vector<ItemScores> week52;
  std::string scheme = "original";

  std::size_t size() const noexcept { return arm.size(); }
  std::size_t count(Arm a) const noexcept;

  void reserve(std::size_t n);
  void push_back(std::string id, Arm a, const ItemScores& base, const ItemScores& w52);

  /// Throws InputError on ragged columns or scores outside [0, max_score].
  void validate(const ScoringScheme& scheme) const;
};

/// Flattened visits: one row per (subject, visit), used for IRT fitting.
struct ResponseRows {
  std::vector<ItemScores> rows;
  std::string scheme = "original";
};

ResponseRows pool_visits(const ItemDataset& data);

/// Item column of one visit as doubles.
std::vector<double> item_column(const std::vector<ItemScores>& visit, std::size_t item);
std::vector<double> sum_scores(const std::vector<ItemScores>& visit);
std::vector<double> domain_scores(const std::vector<ItemScores>& visit, Domain d);

}  // namespace psprs

namespace psprs {

/// Maps every score through the scheme. Input must be in original scoring;
/// throws InputError otherwise. An identity scheme returns an unchanged copy.
ItemDataset apply_rescoring(const ItemDataset& data, const ScoringScheme& scheme);

}  // namespace psprs
