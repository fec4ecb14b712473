#pragma once

#include <array>
#include <cstddef>
#include <string_view>
#include <vector>

namespace psprs {

/// Number of items in the 10-item modified PSPRS.
inline constexpr std::size_t kItemCount = 10;
/// Categories of an item in the original scoring (0..4).
inline constexpr int kOriginalCategories = 5;

using ItemScores = std::array<int, kItemCount>;

/// Treatment arm indicator; treatment is coded 1 in every design matrix.
enum class Arm : unsigned char { kControl = 0, kTreatment = 1 };

/// Original PSPRS item numbers, in column order.
inline constexpr std::array<int, kItemCount> kItemNumbers = {3, 4, 5, 12, 13, 24, 25, 26, 27, 28};

inline constexpr std::array<std::string_view, kItemCount> kItemAbbreviations = {
    "Dysp.FS", "Use.KF", "Fall", "Dysa.", "Dysp.", "Neck.Ri", "Ari.FC", "Gait", "Pos.St", "Sit"};

/// CSV column names (item03 ... item28).
inline constexpr std::array<std::string_view, kItemCount> kItemColumns = {
    "item03", "item04", "item05", "item12", "item13", "item24", "item25", "item26", "item27", "item28"};

enum class Domain { kHistory = 0, kBulbar = 1, kGaitMidline = 2 };
inline constexpr std::size_t kDomainCount = 3;

inline constexpr std::array<Domain, kItemCount> kItemDomain = {
    Domain::kHistory,     Domain::kHistory,     Domain::kHistory,     Domain::kBulbar,
    Domain::kBulbar,      Domain::kGaitMidline, Domain::kGaitMidline, Domain::kGaitMidline,
    Domain::kGaitMidline, Domain::kGaitMidline};

inline constexpr std::array<std::string_view, kDomainCount> kDomainNames = {"History", "Bulbar",
                                                                           "Gait/Midline"};

/// Column indices belonging to a domain.
std::vector<std::size_t> domain_items(Domain d);

}  // namespace psprs
