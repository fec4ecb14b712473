#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace psprs {

/// Transform applied to sorted p-values before cumulative summation.
enum class OmnibusTransform {
  kReciprocal,  ///< h(p) = 1 / max(p, 1e-12)
  kNegLog,      ///< h(p) = -log(max(p, 1e-300))
};

std::string to_string(OmnibusTransform t);
OmnibusTransform omnibus_transform_from_string(const std::string& s);

double omnibus_h(OmnibusTransform t, double p);

/// Monte-Carlo null distribution of the Omnibus statistics under m
/// independent uniform p-values.
struct OmnibusCalibration {
  std::size_t m = 0;
  OmnibusTransform transform = OmnibusTransform::kReciprocal;
  std::size_t reps = 0;
  std::uint64_t seed = 0;
  /// partial_null[s] holds the null draws of S_{s+1}, ascending.
  std::vector<std::vector<double>> partial_null;
  /// Null draws of the combined statistic (min over s of marginal p), ascending.
  std::vector<double> sorted_null_stats;

  /// Upper-tail fraction of null S_{s+1} draws that are >= value.
  double partial_p(std::size_t s, double value) const;
  /// Fraction of null combined statistics <= value.
  double combined_p(double value) const;
};

inline constexpr std::size_t kDefaultOmnibusReps = 100000;
inline constexpr std::uint64_t kDefaultOmnibusSeed = 20240613;

OmnibusCalibration calibrate_omnibus(std::size_t m, std::size_t reps, std::uint64_t seed,
                                     OmnibusTransform transform = OmnibusTransform::kReciprocal);

struct OmnibusResult {
  /// min_s of the marginal p-values of the partial sums.
  double statistic = 1.0;
  double p_value = 1.0;
  std::vector<double> partial_p;
};

/// Throws InputError when p.size() != calib.m.
OmnibusResult omnibus_test(std::span<const double> p, const OmnibusCalibration& calib);

/// Cache file: one text header line
///   "psprs-omnibus-calibration 1 m=<m> transform=<t> reps=<r> seed=<s>\n"
/// followed by little-endian IEEE doubles: m blocks of `reps` sorted partial
/// statistics, then `reps` sorted combined statistics.
void save_calibration(const OmnibusCalibration& calib, const std::string& path);
OmnibusCalibration load_calibration(const std::string& path);

/// File name used inside a cache directory for a key.
std::string calibration_file_name(std::size_t m, OmnibusTransform t, std::size_t reps, std::uint64_t seed);

/// Loads the keyed file from cache_dir when present (and matching), otherwise
/// calibrates and writes it. An empty cache_dir disables caching.
OmnibusCalibration cached_calibration(const std::string& cache_dir, std::size_t m, std::size_t reps, std::uint64_t seed,
                                      OmnibusTransform transform = OmnibusTransform::kReciprocal);

}  // namespace psprs
