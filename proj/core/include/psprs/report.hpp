#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "psprs/reanalysis.hpp"
#include "psprs/study.hpp"

namespace psprs {

enum class ReportFormat { kCsv, kJson, kPlain };

/// "csv", "json" or "plain" (also "table"). Throws InputError.
ReportFormat report_format_from_string(const std::string& s);
std::string extension(ReportFormat f);

/// Shortest round-trip decimal form; "NA" for NaN, "Inf"/"-Inf" for infinities.
std::string format_number(double x);
/// Fixed number of decimals for display tables.
std::string format_fixed(double x, int decimals);

inline constexpr std::array<std::string_view, 9> kPowerColumns = {
    "generator", "scenario", "scheme", "method", "rejection_rate", "mc_se", "n_reps", "rejections", "failures"};

/// Rows are emitted in the order given; run sort_power_table first for the
/// canonical order. An empty table yields the header only (CSV/plain) or an
/// empty "rows" array (JSON).
std::string power_table_csv(const PowerTable& table);
std::string power_table_json(const PowerTable& table, const std::string& plan_json = {});
std::string power_table_plain(const PowerTable& table);
std::string render_power_table(const PowerTable& table, ReportFormat f);

/// Plot-ready wide series: one row per (generator, scheme, scenario), one
/// column per method holding the rejection rate.
std::string power_series_csv(const PowerTable& table);

inline constexpr std::array<std::string_view, 12> kDescriptiveColumns = {
    "item",      "arm",       "n",           "baseline_mean", "baseline_se", "week52_mean",
    "week52_se", "change_mean", "change_se", "ancova_coef",   "ancova_se",   "ancova_p"};

std::string descriptive_csv(const std::vector<DescriptiveRow>& rows);
std::string descriptive_plain(const std::vector<DescriptiveRow>& rows);

inline constexpr std::array<std::string_view, 7> kMethodResultColumns = {
    "comparison", "scheme", "method", "statistic", "p_value", "dropped_items", "error"};

inline constexpr std::array<std::string_view, 11> kItemResultColumns = {
    "comparison", "scheme", "item", "abbreviation", "coef", "se", "t", "p", "holm", "hommel", "gls_weight"};

std::string method_results_csv(const std::vector<MethodResult>& rows);
std::string item_results_csv(const std::vector<ItemResult>& rows);
/// Complete machine-readable document with full-precision values.
std::string reanalysis_json(const ReanalysisReport& report);
/// Human-readable summary; p-values rounded to two decimals.
std::string reanalysis_plain(const ReanalysisReport& report);

/// Writes text to path, throwing IoError when the file cannot be written.
void write_text_file(const std::string& path, const std::string& text);

}  // namespace psprs
