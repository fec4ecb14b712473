#include "psprs/omnibus.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "psprs/error.hpp"
#include "psprs/rng.hpp"

namespace psprs {

std::string to_string(OmnibusTransform t) {
  switch (t) {
    case OmnibusTransform::kReciprocal:
      return "reciprocal";
    case OmnibusTransform::kNegLog:
      return "neglog";
  }
  return "unknown";
}

OmnibusTransform omnibus_transform_from_string(const std::string& s) {
  if (s == "reciprocal") return OmnibusTransform::kReciprocal;
  if (s == "neglog") return OmnibusTransform::kNegLog;
  throw InputError("unknown Omnibus transform '" + s + "' (expected reciprocal or neglog)");
}

double omnibus_h(OmnibusTransform t, double p) {
  switch (t) {
    case OmnibusTransform::kReciprocal:
      return 1.0 / std::max(p, 1e-12);
    case OmnibusTransform::kNegLog:
      return -std::log(std::max(p, 1e-300));
  }
  return 0.0;
}

double OmnibusCalibration::partial_p(std::size_t s, double value) const {
  const auto& v = partial_null[s];
  const auto it = std::lower_bound(v.begin(), v.end(), value);
  return static_cast<double>(v.end() - it) / static_cast<double>(v.size());
}

double OmnibusCalibration::combined_p(double value) const {
  const auto it = std::upper_bound(sorted_null_stats.begin(), sorted_null_stats.end(), value);
  return static_cast<double>(it - sorted_null_stats.begin()) / static_cast<double>(sorted_null_stats.size());
}

namespace {

void partial_sums(std::span<const double> p, OmnibusTransform t, std::vector<double>& sorted, std::vector<double>& sums) {
  sorted.assign(p.begin(), p.end());
  std::sort(sorted.begin(), sorted.end());
  sums.resize(sorted.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    acc += omnibus_h(t, sorted[i]);
    sums[i] = acc;
  }
}

}  // namespace

OmnibusCalibration calibrate_omnibus(std::size_t m, std::size_t reps, std::uint64_t seed, OmnibusTransform transform) {
  if (m == 0) throw InputError("calibrate_omnibus: m must be positive");
  if (reps < 100) throw InputError("calibrate_omnibus: need at least 100 replicates");
  OmnibusCalibration c;
  c.m = m;
  c.transform = transform;
  c.reps = reps;
  c.seed = seed;
  c.partial_null.assign(m, std::vector<double>(reps));
  RngStream rng(seed);
  std::vector<double> u(m), sorted, sums;
  for (std::size_t r = 0; r < reps; ++r) {
    for (auto& x : u) x = rng.uniform();
    partial_sums(u, transform, sorted, sums);
    for (std::size_t s = 0; s < m; ++s) c.partial_null[s][r] = sums[s];
  }
  // Combined statistic per replicate needs the unsorted columns.
  std::vector<std::vector<double>> columns = c.partial_null;
  for (auto& v : c.partial_null) std::sort(v.begin(), v.end());
  c.sorted_null_stats.resize(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    double best = 1.0;
    for (std::size_t s = 0; s < m; ++s) best = std::min(best, c.partial_p(s, columns[s][r]));
    c.sorted_null_stats[r] = best;
  }
  std::sort(c.sorted_null_stats.begin(), c.sorted_null_stats.end());
  return c;
}

OmnibusResult omnibus_test(std::span<const double> p, const OmnibusCalibration& calib) {
  if (p.size() != calib.m) {
    throw InputError("omnibus_test: calibration is for m=" + std::to_string(calib.m) + " but got " +
                     std::to_string(p.size()) + " p-values");
  }
  std::vector<double> sorted, sums;
  partial_sums(p, calib.transform, sorted, sums);
  OmnibusResult out;
  out.partial_p.resize(calib.m);
  out.statistic = 1.0;
  for (std::size_t s = 0; s < calib.m; ++s) {
    out.partial_p[s] = calib.partial_p(s, sums[s]);
    out.statistic = std::min(out.statistic, out.partial_p[s]);
  }
  out.p_value = calib.combined_p(out.statistic);
  return out;
}

namespace {

constexpr const char* kMagic = "psprs-omnibus-calibration";
constexpr int kFormatVersion = 1;

std::string header_line(const OmnibusCalibration& c) {
  std::ostringstream h;
  h << kMagic << ' ' << kFormatVersion << " m=" << c.m << " transform=" << to_string(c.transform) << " reps=" << c.reps
    << " seed=" << c.seed;
  return h.str();
}

void write_doubles(std::ofstream& out, const std::vector<double>& v) {
  static_assert(std::endian::native == std::endian::little, "calibration cache assumes little-endian doubles");
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}

void read_doubles(std::ifstream& in, std::vector<double>& v, std::size_t n, const std::string& path) {
  v.resize(n);
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (!in) throw IoError("calibration file " + path + " is truncated");
}

}  // namespace

void save_calibration(const OmnibusCalibration& calib, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write calibration file " + path);
  out << header_line(calib) << '\n';
  for (const auto& v : calib.partial_null) write_doubles(out, v);
  write_doubles(out, calib.sorted_null_stats);
  if (!out) throw IoError("write failed for " + path);
}

OmnibusCalibration load_calibration(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open calibration file " + path);
  std::string line;
  std::getline(in, line);
  std::istringstream h(line);
  std::string magic, m_kv, t_kv, r_kv, s_kv;
  int version = 0;
  h >> magic >> version >> m_kv >> t_kv >> r_kv >> s_kv;
  if (magic != kMagic) throw InputError("calibration file " + path + ": bad header");
  if (version != kFormatVersion) throw InputError("calibration file " + path + ": unsupported format version");
  auto value_of = [&](const std::string& kv, const std::string& key) {
    if (kv.rfind(key + "=", 0) != 0) throw InputError("calibration file " + path + ": missing " + key);
    return kv.substr(key.size() + 1);
  };
  OmnibusCalibration c;
  try {
    c.m = std::stoull(value_of(m_kv, "m"));
    c.transform = omnibus_transform_from_string(value_of(t_kv, "transform"));
    c.reps = std::stoull(value_of(r_kv, "reps"));
    c.seed = std::stoull(value_of(s_kv, "seed"));
  } catch (const std::logic_error& e) {
    throw InputError("calibration file " + path + ": bad header field (" + e.what() + ")");
  }
  c.partial_null.resize(c.m);
  for (auto& v : c.partial_null) read_doubles(in, v, c.reps, path);
  read_doubles(in, c.sorted_null_stats, c.reps, path);
  return c;
}

std::string calibration_file_name(std::size_t m, OmnibusTransform t, std::size_t reps, std::uint64_t seed) {
  std::ostringstream name;
  name << "omnibus_m" << m << '_' << to_string(t) << "_r" << reps << "_s" << seed << ".cal";
  return name.str();
}

OmnibusCalibration cached_calibration(const std::string& cache_dir, std::size_t m, std::size_t reps, std::uint64_t seed,
                                      OmnibusTransform transform) {
  if (cache_dir.empty()) return calibrate_omnibus(m, reps, seed, transform);
  namespace fs = std::filesystem;
  const fs::path file = fs::path(cache_dir) / calibration_file_name(m, transform, reps, seed);
  if (fs::exists(file)) {
    try {
      auto c = load_calibration(file.string());
      if (c.m == m && c.reps == reps && c.seed == seed && c.transform == transform) return c;
    } catch (const std::exception&) {
      // Stale or corrupt entry; recompute below.
    }
  }
  auto c = calibrate_omnibus(m, reps, seed, transform);
  std::error_code ec;
  fs::create_directories(cache_dir, ec);
  if (!ec) {
    const fs::path tmp = file.string() + ".tmp";
    save_calibration(c, tmp.string());
    fs::rename(tmp, file, ec);
  }
  return c;
}

}  // namespace psprs
