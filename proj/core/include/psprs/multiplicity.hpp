#pragma once

#include <span>
#include <vector>

namespace psprs {

/// min(1, m * min p).
double bonferroni_global(std::span<const double> p);
/// min_i (m / i) * p_(i), capped at 1.
double simes_global(std::span<const double> p);

/// Adjusted p-values in the input order.
std::vector<double> bonferroni_adjust(std::span<const double> p);
std::vector<double> holm_adjust(std::span<const double> p);
/// Closed Simes testing (Hommel), same algorithm as R's p.adjust("hommel").
std::vector<double> hommel_adjust(std::span<const double> p);

}  // namespace psprs
