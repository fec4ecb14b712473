#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "psprs/dataset.hpp"

namespace psprs {

/// Header of the trial CSV, in this exact spelling (column order is free).
inline constexpr std::array<std::string_view, 13> kTrialColumns = {
    "subject_id", "arm", "visit", "item03", "item04", "item05", "item12", "item13", "item24", "item25", "item26", "item27", "item28"};

using MaybeScores = std::array<std::optional<int>, kItemCount>;

struct TrialSubject {
  std::string id;
  std::string arm;
  std::optional<MaybeScores> baseline;
  std::optional<MaybeScores> week52;
  bool complete() const;
};

/// All rows of a trial CSV, grouped by subject in order of first appearance.
struct TrialData {
  std::vector<TrialSubject> subjects;
  /// Arm labels in order of first appearance.
  std::vector<std::string> arms;
};

/// Parses the file. Empty cells and "NA" are missing; other cells must be
/// integers 0..4. When `declared_arms` is non-empty every arm label must be
/// one of them. Errors name the line number (InputError); unreadable files
/// raise IoError.
TrialData read_trial_csv(const std::string& path, const std::vector<std::string>& declared_arms = {});
TrialData parse_trial_csv(const std::string& text, const std::vector<std::string>& declared_arms = {},
                          const std::string& source = "<memory>");

struct CompleteCaseLog {
  std::map<std::string, std::size_t> retained;  ///< per arm label
  std::map<std::string, std::size_t> excluded;
  /// "subject <id> (<arm>): <reason>"
  std::vector<std::string> exclusions;
};

/// Complete-case two-arm dataset: subjects of `treatment` coded as treated,
/// of `control` as controls, in file order. Throws InputError listing the
/// available labels when either arm is absent.
ItemDataset select_comparison(const TrialData& trial, const std::string& treatment, const std::string& control,
                              CompleteCaseLog* log = nullptr);

/// Complete cases of every arm (pooled), with arms coded control for the
/// first label and treatment otherwise. Used for self-fitted IRT models.
ItemDataset pooled_complete_cases(const TrialData& trial, CompleteCaseLog* log = nullptr);

/// read_trial_csv followed by select_comparison.
ItemDataset load_trial_csv(const std::string& path, const std::string& treatment, const std::string& control,
                           CompleteCaseLog* log = nullptr, const std::vector<std::string>& declared_arms = {});

/// One row per (subject, visit), baseline first. Arm labels come from the
/// two arguments.
std::string format_trial_csv(const ItemDataset& data, const std::string& treatment_label,
                             const std::string& control_label);
void write_trial_csv(const ItemDataset& data, const std::string& path, const std::string& treatment_label,
                     const std::string& control_label);
std::string format_trial_csv(const TrialData& trial);
void write_trial_csv(const TrialData& trial, const std::string& path);

}  // namespace psprs

#include "psprs/scoring.hpp"

namespace psprs {

/// Maps every observed score through the scheme; missing cells stay missing.
TrialData rescore_trial(const TrialData& trial, const ScoringScheme& scheme);

}  // namespace psprs
