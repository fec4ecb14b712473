#include "psprs/reference.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "psprs/distributions.hpp"
#include "psprs/error.hpp"

namespace psprs {

using nlohmann::json;

void ReferenceConfig::validate() const {
  if (n_subjects < 10) throw ConfigError("reference: n_subjects must be >= 10");
  if (!(loading > 0.0 && loading < 1.0)) throw ConfigError("reference: loading must lie in (0, 1)");
  if (!(visit_corr >= -1.0 && visit_corr <= 1.0)) throw ConfigError("reference: visit_corr must lie in [-1, 1]");
  if (!(residual_corr >= -1.0 && residual_corr <= 1.0)) throw ConfigError("reference: residual_corr must lie in [-1, 1]");
  for (std::size_t k = 0; k < kItemCount; ++k) {
    for (double m : {baseline_mean[k], week52_mean[k]}) {
      if (!(m > 0.0 && m < 4.0)) throw ConfigError("reference: target means must lie in (0, 4)");
    }
    for (double s : {baseline_sd[k], week52_sd[k]}) {
      if (!(s > 0.0 && s < 2.0)) throw ConfigError("reference: target SDs must lie in (0, 2)");
    }
  }
}

namespace {

template <std::size_t N>
std::array<double, N> read_array(const json& j, const char* key) {
  if (!j.is_array() || j.size() != N) {
    throw ConfigError(std::string("reference: '") + key + "' must be an array of " + std::to_string(N) + " numbers");
  }
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) out[i] = j[i].get<double>();
  return out;
}

}  // namespace

ReferenceConfig reference_config_from_json(const std::string& text) {
  ReferenceConfig c;
  try {
    const json doc = json::parse(text);
    if (!doc.is_object()) throw ConfigError("reference: document must be an object");
    for (const auto& [key, value] : doc.items()) {
      if (key == "n_subjects") {
        c.n_subjects = value.get<std::size_t>();
      } else if (key == "loading") {
        c.loading = value.get<double>();
      } else if (key == "visit_corr") {
        c.visit_corr = value.get<double>();
      } else if (key == "residual_corr") {
        c.residual_corr = value.get<double>();
      } else if (key == "seed") {
        c.seed = value.get<std::uint64_t>();
      } else if (key == "baseline_mean") {
        c.baseline_mean = read_array<kItemCount>(value, "baseline_mean");
      } else if (key == "baseline_sd") {
        c.baseline_sd = read_array<kItemCount>(value, "baseline_sd");
      } else if (key == "week52_mean") {
        c.week52_mean = read_array<kItemCount>(value, "week52_mean");
      } else if (key == "week52_sd") {
        c.week52_sd = read_array<kItemCount>(value, "week52_sd");
      } else if (key == "items" || key == "comment") {
        // Informational.
      } else {
        throw ConfigError("reference: unknown key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("reference: ") + e.what());
  }
  c.validate();
  return c;
}

ReferenceConfig load_reference_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open reference config " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return reference_config_from_json(buf.str());
}

std::string reference_config_to_json(const ReferenceConfig& c) {
  json doc;
  json items = json::array();
  for (auto col : kItemColumns) items.push_back(std::string(col));
  doc["items"] = items;
  doc["n_subjects"] = c.n_subjects;
  doc["loading"] = c.loading;
  doc["visit_corr"] = c.visit_corr;
  doc["residual_corr"] = c.residual_corr;
  doc["seed"] = c.seed;
  doc["baseline_mean"] = c.baseline_mean;
  doc["baseline_sd"] = c.baseline_sd;
  doc["week52_mean"] = c.week52_mean;
  doc["week52_sd"] = c.week52_sd;
  return doc.dump(2);
}

std::pair<double, double> discretized_moments(double mu, double sigma) {
  // Cell j collects (j - 0.5, j + 0.5]; the end cells are open-ended.
  double mean = 0.0, second = 0.0;
  double lower_cdf = 0.0;
  for (int j = 0; j <= 4; ++j) {
    const double upper_cdf = j == 4 ? 1.0 : normal_cdf((j + 0.5 - mu) / sigma);
    const double pj = upper_cdf - lower_cdf;
    mean += j * pj;
    second += j * j * pj;
    lower_cdf = upper_cdf;
  }
  return {mean, std::sqrt(std::max(0.0, second - mean * mean))};
}

namespace {

double solve_mu(double target_mean, double sigma) {
  // Wide enough that the end cells hold all but a negligible mass.
  double lo = -20.0 - 40.0 * sigma, hi = 24.0 + 40.0 * sigma;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (discretized_moments(mid, sigma).first < target_mean) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

DiscreteCalibration calibrate_discretization(double target_mean, double target_sd) {
  if (!(target_mean > 0.0 && target_mean < 4.0)) throw ConfigError("discretization target mean must lie in (0, 4)");
  // No distribution on [0, 4] with this mean has a larger variance.
  if (!(target_sd > 0.0) || target_sd * target_sd >= target_mean * (4.0 - target_mean)) {
    std::ostringstream msg;
    msg << "discretization target (mean " << target_mean << ", sd " << target_sd << ") is not attainable";
    throw ConfigError(msg.str());
  }
  // At fixed discrete mean the discrete SD grows with sigma.
  double lo = 1e-3, hi = 50.0;
  auto sd_at = [&](double sigma) { return discretized_moments(solve_mu(target_mean, sigma), sigma).second; };
  if (sd_at(lo) > target_sd || sd_at(hi) < target_sd) {
    std::ostringstream msg;
    msg << "discretization target (mean " << target_mean << ", sd " << target_sd << ") is not attainable";
    throw ConfigError(msg.str());
  }
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (sd_at(mid) < target_sd) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  DiscreteCalibration c;
  c.sigma = 0.5 * (lo + hi);
  c.mu = solve_mu(target_mean, c.sigma);
  return c;
}

DiscretizedMvnParams reference_latent_params(const ReferenceConfig& config) {
  config.validate();
  constexpr Eigen::Index m = kItemCount;
  const double l2 = config.loading * config.loading;
  Matrix corr(2 * m, 2 * m);
  for (Eigen::Index a = 0; a < 2 * m; ++a) {
    for (Eigen::Index b = 0; b < 2 * m; ++b) {
      const bool same_visit = (a < m) == (b < m);
      const bool same_item = a % m == b % m;
      double r = 0.0;
      if (a == b) {
        r = 1.0;
      } else if (same_visit) {
        r = l2;
      } else if (same_item) {
        r = l2 * config.visit_corr + (1.0 - l2) * config.residual_corr;
      } else {
        r = l2 * config.visit_corr;
      }
      corr(a, b) = r;
    }
  }
  DiscretizedMvnParams p;
  p.mean20.resize(2 * m);
  Vector scale(2 * m);
  for (std::size_t k = 0; k < kItemCount; ++k) {
    const auto b = calibrate_discretization(config.baseline_mean[k], config.baseline_sd[k]);
    const auto w = calibrate_discretization(config.week52_mean[k], config.week52_sd[k]);
    p.mean20(static_cast<Eigen::Index>(k)) = b.mu;
    scale(static_cast<Eigen::Index>(k)) = b.sigma;
    p.mean20(static_cast<Eigen::Index>(k) + m) = w.mu;
    scale(static_cast<Eigen::Index>(k) + m) = w.sigma;
  }
  p.cov20 = scale.asDiagonal() * corr * scale.asDiagonal();
  return p;
}

ItemDataset build_synthetic_reference(const ReferenceConfig& config) {
  RngStream rng(config.seed);
  return build_synthetic_reference(config, rng);
}

ItemDataset build_synthetic_reference(const ReferenceConfig& config, RngStream& rng) {
  const DiscretizedMvnParams p = reference_latent_params(config);
  const MvnSpec spec = p.spec();
  const Matrix draws = sample_mvn(spec, config.n_subjects, rng);
  ItemDataset out;
  out.reserve(config.n_subjects);
  for (std::size_t i = 0; i < config.n_subjects; ++i) {
    ItemScores base{}, w52{};
    for (std::size_t k = 0; k < kItemCount; ++k) {
      base[k] = discretize_score(draws(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)));
      w52[k] = discretize_score(draws(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k + kItemCount)));
    }
    std::ostringstream id;
    id << "R" << (i + 1);
    out.push_back(id.str(), i % 2 == 0 ? Arm::kControl : Arm::kTreatment, base, w52);
  }
  return out;
}

DiscretizedMvnParams estimate_mvn_params(const ItemDataset& pool) {
  const std::size_t n = pool.size();
  if (n < 3) throw InputError("estimate_mvn_params: need at least 3 subjects");
  constexpr Eigen::Index m = kItemCount;
  Matrix x(static_cast<Eigen::Index>(n), 2 * m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < kItemCount; ++k) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = pool.baseline[i][k];
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k) + m) = pool.week52[i][k];
    }
  }
  DiscretizedMvnParams p;
  p.mean20 = x.colwise().mean().transpose();
  const Matrix centered = x.rowwise() - p.mean20.transpose();
  p.cov20 = (centered.transpose() * centered) / static_cast<double>(n - 1);
  return p;
}

}  // namespace psprs
