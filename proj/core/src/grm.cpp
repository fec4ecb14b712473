#include "psprs/grm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "psprs/distributions.hpp"
#include "psprs/error.hpp"
#include "psprs/linalg.hpp"

namespace psprs {

int GrItemParams::raw_score(int category) const {
  if (score_map.empty()) return category;
  for (std::size_t r = 0; r < score_map.size(); ++r) {
    if (score_map[r] == category) return static_cast<int>(r);
  }
  throw InputError("GrItemParams: category " + std::to_string(category) + " has no raw score");
}

void GrItemParams::validate() const {
  if (!(discrimination > 0.0) || !std::isfinite(discrimination)) {
    throw InputError("item " + name + ": discrimination must be positive and finite");
  }
  if (thresholds.empty()) throw InputError("item " + name + ": needs at least one threshold");
  for (std::size_t c = 0; c < thresholds.size(); ++c) {
    if (!std::isfinite(thresholds[c])) throw InputError("item " + name + ": non-finite threshold");
    if (c > 0 && !(thresholds[c] > thresholds[c - 1])) throw InputError("item " + name + ": thresholds must increase");
  }
  if (!score_map.empty()) {
    if (score_map.front() != 0 || score_map.back() != categories() - 1) {
      throw InputError("item " + name + ": score map does not cover the model categories");
    }
    for (std::size_t r = 1; r < score_map.size(); ++r) {
      const int step = score_map[r] - score_map[r - 1];
      if (step < 0 || step > 1) throw InputError("item " + name + ": score map must be monotone and onto");
    }
  }
}

void GrModel::validate() const {
  if (items.size() != kItemCount) {
    throw InputError("GrModel: expected " + std::to_string(kItemCount) + " items, got " + std::to_string(items.size()));
  }
  for (const auto& it : items) it.validate();
}

void GrModel::validate(const ScoringScheme& s) const {
  validate();
  if (scheme != s.name) throw InputError("GrModel: model scheme '" + scheme + "' does not match data scheme '" + s.name + "'");
  for (std::size_t k = 0; k < kItemCount; ++k) {
    if (items[k].raw_categories() != s.categories(k)) {
      throw InputError("GrModel: item " + std::string(kItemColumns[k]) + " has " +
                       std::to_string(items[k].raw_categories()) + " categories, scheme expects " +
                       std::to_string(s.categories(k)));
    }
  }
}

std::vector<double> grm_category_probs(const GrItemParams& item, double theta) {
  const int cats = item.categories();
  std::vector<double> p(static_cast<std::size_t>(cats));
  const double a = item.discrimination;
  // upper(c) = P(Y >= c); upper(0) = 1, upper(C) = 0.
  double prev = 1.0;
  for (int c = 0; c < cats; ++c) {
    double next = 0.0;
    if (c + 1 < cats) next = logistic(a * (theta - item.thresholds[static_cast<std::size_t>(c)]));
    if (c == 0) {
      p[0] = logistic(-a * (theta - item.thresholds[0]));
    } else {
      p[static_cast<std::size_t>(c)] = prev - next;
    }
    prev = next;
  }
  return p;
}

QuadratureRule normal_quadrature(int n) {
  if (n < 1) throw InputError("normal_quadrature: need at least one node");
  Matrix jacobi = Matrix::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    const double off = std::sqrt(static_cast<double>(i));
    jacobi(i, i - 1) = off;
    jacobi(i - 1, i) = off;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(jacobi);
  QuadratureRule rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    rule.nodes[static_cast<std::size_t>(i)] = eig.eigenvalues()(i);
    const double v = eig.eigenvectors()(0, i);
    rule.weights[static_cast<std::size_t>(i)] = v * v;
    total += v * v;
  }
  for (double& w : rule.weights) w /= total;
  // Exact symmetry of the rule keeps symmetric posteriors centred at zero.
  for (int i = 0; i < n / 2; ++i) {
    const auto lo = static_cast<std::size_t>(i);
    const auto hi = static_cast<std::size_t>(n - 1 - i);
    const double x = 0.5 * (rule.nodes[hi] - rule.nodes[lo]);
    rule.nodes[lo] = -x;
    rule.nodes[hi] = x;
    const double w = 0.5 * (rule.weights[lo] + rule.weights[hi]);
    rule.weights[lo] = w;
    rule.weights[hi] = w;
  }
  if (n % 2 == 1) rule.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
  return rule;
}

EapScorer::EapScorer(GrModel model, int nodes) : model_(std::move(model)), rule_(normal_quadrature(nodes)) {
  model_.validate();
  const std::size_t q = rule_.nodes.size();
  log_prob_.resize(model_.items.size());
  for (std::size_t k = 0; k < model_.items.size(); ++k) {
    const auto& item = model_.items[k];
    const auto cats = static_cast<std::size_t>(item.categories());
    log_prob_[k].assign(cats * q, 0.0);
    for (std::size_t j = 0; j < q; ++j) {
      const auto p = grm_category_probs(item, rule_.nodes[j]);
      for (std::size_t c = 0; c < cats; ++c) {
        log_prob_[k][c * q + j] = std::log(std::max(p[c], std::numeric_limits<double>::min()));
      }
    }
  }
}

double EapScorer::eap(const ItemScores& responses) const {
  const std::size_t q = rule_.nodes.size();
  double loglik[128];
  std::vector<double> heap;
  double* ll = loglik;
  if (q > 128) {
    heap.resize(q);
    ll = heap.data();
  }
  for (std::size_t j = 0; j < q; ++j) ll[j] = std::log(rule_.weights[j]);
  for (std::size_t k = 0; k < kItemCount; ++k) {
    const auto& item = model_.items[k];
    const int raw = responses[k];
    if (raw < 0 || raw >= item.raw_categories()) {
      throw InputError("eap_score: item " + std::string(kItemColumns[k]) + " response " + std::to_string(raw) +
                       " outside 0.." + std::to_string(item.raw_categories() - 1));
    }
    const double* row = &log_prob_[k][static_cast<std::size_t>(item.model_category(raw)) * q];
    for (std::size_t j = 0; j < q; ++j) ll[j] += row[j];
  }
  const double peak = *std::max_element(ll, ll + q);
  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < q; ++j) {
    const double w = std::exp(ll[j] - peak);
    num += w * rule_.nodes[j];
    den += w;
  }
  return num / den;
}

std::vector<double> EapScorer::eap(std::span<const ItemScores> rows) const {
  std::vector<double> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out[i] = eap(rows[i]);
  return out;
}

double eap_score(const GrModel& model, const ItemScores& responses, int nodes) {
  return EapScorer(model, nodes).eap(responses);
}

}  // namespace psprs
