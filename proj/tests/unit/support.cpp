#include "support.hpp"

#include <algorithm>
#include <cmath>

#include "psprs/scoring.hpp"

namespace psprs::testing {

std::string cache_dir() { return PSPRS_TEST_CACHE_DIR; }

std::string source_path(const std::string& relative) { return std::string(PSPRS_SOURCE_DIR) + "/" + relative; }

ItemDataset random_item_dataset(std::size_t n_per_arm, RngStream& rng) {
  ItemDataset d;
  for (std::size_t i = 0; i < 2 * n_per_arm; ++i) {
    ItemScores b{}, w{};
    for (std::size_t k = 0; k < kItemCount; ++k) {
      b[k] = static_cast<int>(rng.below(5));
      const int step = static_cast<int>(rng.below(3)) - 1;
      w[k] = std::clamp(b[k] + step, 0, 4);
    }
    const Arm arm = i < n_per_arm ? Arm::kControl : Arm::kTreatment;
    d.push_back((arm == Arm::kControl ? "C" : "T") + std::to_string(i + 1), arm, b, w);
  }
  return d;
}

const StudyContext& shared_context() {
  static const StudyContext ctx = [] {
    StudyPlan plan;
    plan.scenarios = {EffectScenario::builtin("null")};
    plan.schemes = {"original", "fda-collapse"};
    plan.omnibus.cache_dir = cache_dir();
    PrepareOptions opts;
    opts.force_irt = true;
    return prepare_study(plan, opts);
  }();
  return ctx;
}

double correlation(std::span<const double> a, std::span<const double> b) {
  const auto n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

std::array<double, 3> solve3(const std::array<std::array<double, 3>, 3>& a, const std::array<double, 3>& b) {
  auto det = [](const std::array<std::array<double, 3>, 3>& m) {
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  };
  const double d = det(a);
  std::array<double, 3> x{};
  for (int c = 0; c < 3; ++c) {
    auto m = a;
    for (int r = 0; r < 3; ++r) m[r][c] = b[r];
    x[c] = det(m) / d;
  }
  return x;
}

double ks_uniform_distance(std::vector<double> p) {
  std::sort(p.begin(), p.end());
  const auto n = static_cast<double>(p.size());
  double d = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double lo = static_cast<double>(i) / n;
    const double hi = static_cast<double>(i + 1) / n;
    d = std::max({d, std::fabs(p[i] - lo), std::fabs(hi - p[i])});
  }
  return d;
}

double ks_critical_001(std::size_t n) {
  // Kolmogorov distribution: P(sqrt(n) D > 1.9495) = 0.001.
  return 1.9495 / std::sqrt(static_cast<double>(n));
}

Matrix random_correlation(Eigen::Index k, RngStream& rng) {
  Matrix a(k, k + 3);
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) a(i, j) = rng.normal();
  Matrix s = a * a.transpose();
  Vector d = s.diagonal().cwiseSqrt().cwiseInverse();
  Matrix c = d.asDiagonal() * s * d.asDiagonal();
  for (Eigen::Index i = 0; i < k; ++i) c(i, i) = 1.0;
  return (c + c.transpose()) * 0.5;
}

}  // namespace psprs::testing
