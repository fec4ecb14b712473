#include "psprs/generators.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "psprs/error.hpp"

namespace psprs {

namespace {

std::array<double, kItemCount> filled(double v) {
  std::array<double, kItemCount> d{};
  d.fill(v);
  return d;
}

std::array<double, kItemCount> on_items(std::initializer_list<std::size_t> items, double v) {
  std::array<double, kItemCount> d{};
  for (auto k : items) d[k] = v;
  return d;
}

std::string id_for(char prefix, std::size_t i) {
  std::ostringstream o;
  o << prefix << (i + 1);
  return o.str();
}

}  // namespace

bool EffectScenario::is_null() const {
  if (kind == Kind::kSlopeRatio) return rho == 1.0;
  return std::all_of(d.begin(), d.end(), [](double v) { return v == 0.0; });
}

void EffectScenario::validate(bool allow_zero_rho) const {
  if (kind == Kind::kItemShift) {
    for (std::size_t k = 0; k < kItemCount; ++k) {
      if (!(d[k] >= 0.0) || !std::isfinite(d[k])) {
        throw InputError("scenario " + label + ": effect for " + std::string(kItemColumns[k]) +
                         " must be finite and >= 0");
      }
    }
  } else {
    const bool ok = allow_zero_rho ? (rho >= 0.0 && rho <= 1.0) : (rho > 0.0 && rho <= 1.0);
    if (!ok) throw InputError("scenario " + label + ": rho must lie in (0, 1]");
  }
}

EffectScenario EffectScenario::item_shift(std::string label, const std::array<double, kItemCount>& d) {
  EffectScenario s;
  s.kind = Kind::kItemShift;
  s.label = std::move(label);
  s.d = d;
  s.validate();
  return s;
}

EffectScenario EffectScenario::slope_ratio(double rho) {
  EffectScenario s;
  s.kind = Kind::kSlopeRatio;
  std::ostringstream o;
  o << "rho=" << rho;
  s.label = o.str();
  s.rho = rho;
  s.validate();
  return s;
}

EffectScenario EffectScenario::builtin(const std::string& label) {
  if (label == "null") return item_shift("null", filled(0.0));
  if (label == "d1") return item_shift(label, filled(0.20));
  if (label == "d2") return item_shift(label, filled(0.25));
  if (label == "d3") return item_shift(label, filled(0.30));
  if (label == "d4") return item_shift(label, on_items({0, 1, 2}, 0.85));
  if (label == "d5") return item_shift(label, on_items({3, 4}, 1.25));
  if (label == "d6") return item_shift(label, on_items({5, 6, 7, 8, 9}, 0.5));
  if (label == "d7") return item_shift(label, on_items({0, 1, 2, 3, 4}, 0.5));
  if (label == "d8") return item_shift(label, on_items({0, 1, 2, 5, 6, 7, 8, 9}, 0.3));
  if (label == "d9") return item_shift(label, on_items({3, 4, 5, 6, 7, 8, 9}, 0.35));
  if (label == "d10") return item_shift(label, on_items({0}, 2.5));
  if (label == "d11") return item_shift(label, on_items({3}, 2.5));
  if (label == "d12") return item_shift(label, on_items({5}, 2.5));
  if (label.rfind("rho=", 0) == 0) {
    try {
      std::size_t used = 0;
      const double rho = std::stod(label.substr(4), &used);
      if (used == label.size() - 4) return slope_ratio(rho);
    } catch (const std::logic_error&) {
    }
  }
  throw InputError("unknown scenario '" + label + "' (expected null, d1..d12 or rho=<value>)");
}

std::vector<std::string> builtin_shift_labels() {
  std::vector<std::string> out;
  for (int i = 1; i <= 12; ++i) out.push_back("d" + std::to_string(i));
  return out;
}

std::vector<double> default_rho_grid() { return {0.45, 0.50, 0.55, 0.60, 0.65, 0.70, 0.75}; }

MvnSpec DiscretizedMvnParams::spec() const {
  if (mean20.size() != 20 || cov20.rows() != 20 || cov20.cols() != 20) {
    throw InputError("discretized MVN parameters must be 20-dimensional");
  }
  return MvnSpec(mean20, cov20);
}

int discretize_score(double x) noexcept {
  const double r = std::round(x);
  if (!(r > 0.0)) return 0;
  if (r >= 4.0) return 4;
  return static_cast<int>(r);
}

ItemDataset gen_discretized_mvn(const MvnSpec& spec, const EffectScenario& scenario, std::size_t n, RngStream& rng) {
  if (n < 2) throw InputError("gen_discretized_mvn: need n >= 2 per group");
  if (spec.dim() != 2 * static_cast<Eigen::Index>(kItemCount)) throw InputError("gen_discretized_mvn: need a 20-dim spec");
  if (scenario.kind != EffectScenario::Kind::kItemShift) {
    throw InputError("gen_discretized_mvn: scenario " + scenario.label + " is not an item-shift scenario");
  }
  scenario.validate();
  const Matrix draws = sample_mvn(spec, 2 * n, rng);
  ItemDataset out;
  out.reserve(2 * n);
  for (std::size_t i = 0; i < 2 * n; ++i) {
    const bool treated = i >= n;
    ItemScores base{}, w52{};
    for (std::size_t k = 0; k < kItemCount; ++k) {
      base[k] = discretize_score(draws(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)));
      const double shift = treated ? scenario.d[k] : 0.0;
      w52[k] = discretize_score(draws(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k + kItemCount)) - shift);
    }
    out.push_back(treated ? id_for('T', i - n) : id_for('C', i), treated ? Arm::kTreatment : Arm::kControl, base, w52);
  }
  return out;
}

ItemDataset gen_discretized_mvn(const DiscretizedMvnParams& params, const EffectScenario& scenario, std::size_t n,
                                RngStream& rng) {
  return gen_discretized_mvn(params.spec(), scenario, n, rng);
}

std::size_t extra_unit_count(double d, std::size_t n) {
  const double p = d - std::floor(d);
  return static_cast<std::size_t>(std::lround(static_cast<double>(n) * p));
}

void inject_item_effect(std::span<int> scores, double d, std::span<const std::size_t> selected,
                        std::vector<int>* pre_clamp) {
  const int whole = static_cast<int>(std::floor(d));
  for (int& y : scores) y -= whole;
  for (std::size_t j : selected) {
    if (j >= scores.size()) throw InputError("inject_item_effect: selected index out of range");
    scores[j] -= 1;
  }
  if (pre_clamp != nullptr) pre_clamp->assign(scores.begin(), scores.end());
  for (int& y : scores) y = std::max(0, y);
}

namespace {

// First `count` entries of a partial Fisher-Yates shuffle of 0..n-1.
std::vector<std::size_t> choose_without_replacement(std::size_t n, std::size_t count, RngStream& rng) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(count);
  return idx;
}

}  // namespace

ItemDataset gen_bootstrap(const ItemDataset& pool, const EffectScenario& scenario, std::size_t n, RngStream& rng,
                          bool replace, BootstrapTrace* trace) {
  if (n < 2) throw InputError("gen_bootstrap: need n >= 2 per group");
  if (pool.scheme != "original") throw InputError("gen_bootstrap: the pool must be in original scoring");
  if (scenario.kind != EffectScenario::Kind::kItemShift) {
    throw InputError("gen_bootstrap: scenario " + scenario.label + " is not an item-shift scenario");
  }
  scenario.validate();
  const std::size_t total = 2 * n;
  if (pool.size() == 0 || (!replace && pool.size() < total)) {
    throw InputError("gen_bootstrap: pool has " + std::to_string(pool.size()) + " subjects but " +
                     std::to_string(total) + " are needed without replacement");
  }
  std::vector<std::size_t> picks;
  if (replace) {
    picks.resize(total);
    for (auto& p : picks) p = static_cast<std::size_t>(rng.below(pool.size()));
  } else {
    picks = choose_without_replacement(pool.size(), total, rng);
  }

  ItemDataset out;
  out.reserve(total);
  for (std::size_t i = 0; i < total; ++i) {
    const std::size_t src = picks[i];
    const bool treated = i >= n;
    std::string id = pool.ids[src];
    if (replace) id += "#" + std::to_string(i + 1);
    out.push_back(std::move(id), treated ? Arm::kTreatment : Arm::kControl, pool.baseline[src], pool.week52[src]);
  }

  if (trace != nullptr) {
    trace->pool_indices = picks;
    for (auto& v : trace->selected) v.clear();
    for (auto& v : trace->pre_clamp) v.clear();
    for (auto& v : trace->original) v.clear();
  }
  std::vector<int> column(n);
  for (std::size_t k = 0; k < kItemCount; ++k) {
    const double d = scenario.d[k];
    if (d == 0.0 && trace == nullptr) continue;
    for (std::size_t j = 0; j < n; ++j) column[j] = out.week52[n + j][k];
    const auto selected = choose_without_replacement(n, extra_unit_count(d, n), rng);
    if (trace != nullptr) {
      trace->original[k] = column;
      trace->selected[k] = selected;
    }
    inject_item_effect(column, d, selected, trace != nullptr ? &trace->pre_clamp[k] : nullptr);
    for (std::size_t j = 0; j < n; ++j) out.week52[n + j][k] = column[j];
  }
  return out;
}

void IrtPopulationParams::validate() const {
  if (!(intercept_sd >= 0.0) || !(slope_sd >= 0.0)) throw InputError("IRT population: standard deviations must be >= 0");
  if (!(slope_mean > 0.0)) throw InputError("IRT population: slope_mean must be > 0");
  if (!(horizon_years > 0.0)) throw InputError("IRT population: horizon_years must be > 0");
  if (!std::isfinite(intercept_mean)) throw InputError("IRT population: intercept_mean must be finite");
}

int sample_grm_item(const GrItemParams& item, double theta, RngStream& rng) {
  // P(Y >= c) is decreasing in c; walk up while u falls below it.
  const double u = rng.uniform();
  int c = 0;
  for (std::size_t j = 0; j < item.thresholds.size(); ++j) {
    const double above = 1.0 / (1.0 + std::exp(-item.discrimination * (theta - item.thresholds[j])));
    if (u < above) {
      c = static_cast<int>(j) + 1;
    } else {
      break;
    }
  }
  return item.raw_score(c);
}

ItemDataset gen_irt_longitudinal(const IrtPopulationParams& pop, const GrModel& model, double rho, std::size_t n,
                                 RngStream& rng, std::vector<LatentPath>* latent) {
  if (n < 2) throw InputError("gen_irt_longitudinal: need n >= 2 per group");
  if (!(rho >= 0.0 && rho <= 1.0)) throw InputError("gen_irt_longitudinal: rho must lie in [0, 1]");
  if (model.scheme != "original") throw InputError("gen_irt_longitudinal: the generating model must use original scores");
  pop.validate();
  model.validate();
  ItemDataset out;
  out.reserve(2 * n);
  if (latent != nullptr) latent->clear();
  for (std::size_t i = 0; i < 2 * n; ++i) {
    const bool treated = i >= n;
    const double psi0 = pop.intercept_mean + pop.intercept_sd * rng.normal();
    double s = 0.0;
    do {
      s = pop.slope_mean + pop.slope_sd * rng.normal();
    } while (s < 0.0);
    const double psi1 = psi0 + (treated ? rho : 1.0) * s * pop.horizon_years;
    ItemScores base{}, w52{};
    for (std::size_t k = 0; k < kItemCount; ++k) base[k] = sample_grm_item(model.items[k], psi0, rng);
    for (std::size_t k = 0; k < kItemCount; ++k) w52[k] = sample_grm_item(model.items[k], psi1, rng);
    if (latent != nullptr) latent->push_back({psi0, psi1});
    out.push_back(treated ? id_for('T', i - n) : id_for('C', i), treated ? Arm::kTreatment : Arm::kControl, base, w52);
  }
  return out;
}

}  // namespace psprs
