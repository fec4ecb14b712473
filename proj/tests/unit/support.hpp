// Shared fixtures and small reference computations for the unit suites.
#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "psprs/dataset.hpp"
#include "psprs/linalg.hpp"
#include "psprs/rng.hpp"
#include "psprs/study.hpp"

namespace psprs::testing {

/// Omnibus cache shared by the suites (created by the build).
std::string cache_dir();

/// Path under the source tree.
std::string source_path(const std::string& relative);

/// Two arms of n subjects whose item scores are independent draws from
/// {0..4}; week-52 equals baseline plus a random step, clamped.
ItemDataset random_item_dataset(std::size_t n_per_arm, RngStream& rng);

/// Default plan context (reference pool, MVN parameters, IRT models for
/// original and fda-collapse), built once per process.
const StudyContext& shared_context();

/// Pearson correlation.
double correlation(std::span<const double> a, std::span<const double> b);

/// Solves the 3x3 system a x = b by Cramer's rule.
std::array<double, 3> solve3(const std::array<std::array<double, 3>, 3>& a, const std::array<double, 3>& b);

/// One-sample Kolmogorov-Smirnov distance to the uniform distribution.
double ks_uniform_distance(std::vector<double> p);

/// Critical value of the KS distance at level 0.001 (asymptotic).
double ks_critical_001(std::size_t n);

/// Random symmetric positive-definite matrix with unit diagonal.
Matrix random_correlation(Eigen::Index k, RngStream& rng);

}  // namespace psprs::testing
