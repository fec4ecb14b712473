#include "psprs/grm_fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "psprs/distributions.hpp"
#include "psprs/linalg.hpp"

namespace psprs {

namespace {

struct Pattern {
  ItemScores categories;  // model categories
  double count;
};

// Slope-intercept form: P(Y >= c) = logistic(a * theta + d_c), d decreasing.
struct ItemState {
  double a = 1.0;
  std::vector<double> d;
};

int cats_of(const ItemState& s) { return static_cast<int>(s.d.size()) + 1; }

// Fills log P(Y = c | theta_q) for all categories and nodes.
void item_log_probs(const ItemState& s, const std::vector<double>& nodes, std::vector<double>& out) {
  const auto q = nodes.size();
  const auto cats = static_cast<std::size_t>(cats_of(s));
  out.assign(cats * q, 0.0);
  for (std::size_t j = 0; j < q; ++j) {
    double prev = 1.0;
    for (std::size_t c = 0; c < cats; ++c) {
      const double next = c + 1 < cats ? logistic(s.a * nodes[j] + s.d[c]) : 0.0;
      double p = c == 0 ? logistic(-(s.a * nodes[j] + s.d[0])) : prev - next;
      out[c * q + j] = std::log(std::max(p, std::numeric_limits<double>::min()));
      prev = next;
    }
  }
}

// Expected complete-data log-likelihood of one item, with gradient and
// Hessian in (a, d_1, ..., d_{C-1}).
double item_objective(const ItemState& s, const std::vector<double>& nodes, const std::vector<double>& r, Vector* grad,
                      Matrix* hess) {
  const auto q = nodes.size();
  const int cats = cats_of(s);
  const int np = cats;
  if (grad) *grad = Vector::Zero(np);
  if (hess) *hess = Matrix::Zero(np, np);
  std::vector<double> pstar(static_cast<std::size_t>(cats + 1)), w(static_cast<std::size_t>(cats + 1)),
      v(static_cast<std::size_t>(cats + 1));
  double value = 0.0;
  Vector g(np);
  for (std::size_t j = 0; j < q; ++j) {
    const double th = nodes[j];
    pstar[0] = 1.0;
    w[0] = v[0] = 0.0;
    pstar[static_cast<std::size_t>(cats)] = 0.0;
    w[static_cast<std::size_t>(cats)] = v[static_cast<std::size_t>(cats)] = 0.0;
    for (int c = 1; c < cats; ++c) {
      const double ps = logistic(s.a * th + s.d[static_cast<std::size_t>(c - 1)]);
      pstar[static_cast<std::size_t>(c)] = ps;
      w[static_cast<std::size_t>(c)] = ps * (1.0 - ps);
      v[static_cast<std::size_t>(c)] = w[static_cast<std::size_t>(c)] * (1.0 - 2.0 * ps);
    }
    for (int c = 0; c < cats; ++c) {
      const double count = r[static_cast<std::size_t>(c) * q + j];
      if (count == 0.0) continue;
      const auto cu = static_cast<std::size_t>(c);
      double p = c == 0 ? logistic(-(s.a * th + s.d[0])) : pstar[cu] - pstar[cu + 1];
      p = std::max(p, 1e-300);
      value += count * std::log(p);
      if (!grad) continue;
      // dP/dparams
      g.setZero();
      g(0) = th * (w[cu] - w[cu + 1]);
      if (c >= 1) g(c) += w[cu];
      if (c + 1 <= cats - 1) g(c + 1) -= w[cu + 1];
      *grad += count * g / p;
      if (!hess) continue;
      Matrix h2 = Matrix::Zero(np, np);
      h2(0, 0) = th * th * (v[cu] - v[cu + 1]);
      if (c >= 1) {
        h2(0, c) += th * v[cu];
        h2(c, 0) += th * v[cu];
        h2(c, c) += v[cu];
      }
      if (c + 1 <= cats - 1) {
        h2(0, c + 1) -= th * v[cu + 1];
        h2(c + 1, 0) -= th * v[cu + 1];
        h2(c + 1, c + 1) -= v[cu + 1];
      }
      *hess += count * (h2 / p - (g * g.transpose()) / (p * p));
    }
  }
  return value;
}

bool feasible(const ItemState& s) {
  if (!(s.a > 1e-6) || !std::isfinite(s.a) || s.a > 50.0) return false;
  for (std::size_t c = 0; c < s.d.size(); ++c) {
    if (!std::isfinite(s.d[c])) return false;
    if (c > 0 && !(s.d[c] < s.d[c - 1])) return false;
  }
  return true;
}

void newton_update(ItemState& s, const std::vector<double>& nodes, const std::vector<double>& r, int steps) {
  Vector g;
  Matrix h;
  double f = item_objective(s, nodes, r, &g, &h);
  for (int it = 0; it < steps; ++it) {
    if (g.lpNorm<Eigen::Infinity>() < 1e-10) break;
    Matrix neg = -h;
    Eigen::LLT<Matrix> llt(neg);
    double ridge = 0.0;
    while (llt.info() != Eigen::Success) {
      ridge = ridge == 0.0 ? 1e-6 * std::max(1.0, neg.diagonal().cwiseAbs().maxCoeff()) : ridge * 10.0;
      llt.compute(neg + ridge * Matrix::Identity(neg.rows(), neg.cols()));
    }
    const Vector step = llt.solve(g);
    double scale = 1.0;
    bool improved = false;
    for (int half = 0; half < 40; ++half, scale *= 0.5) {
      ItemState trial = s;
      trial.a += scale * step(0);
      for (std::size_t c = 0; c < trial.d.size(); ++c) trial.d[c] += scale * step(static_cast<Eigen::Index>(c + 1));
      if (!feasible(trial)) continue;
      const double ft = item_objective(trial, nodes, r, nullptr, nullptr);
      if (ft >= f) {
        s = trial;
        improved = ft > f;
        f = item_objective(s, nodes, r, &g, &h);
        break;
      }
    }
    if (!improved) break;
  }
}

}  // namespace

GrFitResult fit_grm(const ResponseRows& pooled, const ScoringScheme& scheme, const GrFitOptions& options) {
  if (pooled.rows.empty()) throw InputError("fit_grm: no rows");
  if (pooled.scheme != scheme.name) throw InputError("fit_grm: rows are scored with '" + pooled.scheme + "', not '" + scheme.name + "'");

  GrModel model;
  model.scheme = scheme.name;
  model.items.resize(kItemCount);

  // Observed categories and merge maps.
  std::vector<std::vector<double>> freq(kItemCount);
  for (std::size_t k = 0; k < kItemCount; ++k) {
    const int raw_cats = scheme.categories(k);
    freq[k].assign(static_cast<std::size_t>(raw_cats), 0.0);
    for (const auto& row : pooled.rows) {
      if (row[k] < 0 || row[k] >= raw_cats) {
        throw InputError("fit_grm: item " + std::string(kItemColumns[k]) + " response " + std::to_string(row[k]) +
                         " outside 0.." + std::to_string(raw_cats - 1));
      }
      freq[k][static_cast<std::size_t>(row[k])] += 1.0;
    }
    auto& item = model.items[k];
    item.name = std::string(kItemAbbreviations[k]);
    std::vector<int> map(static_cast<std::size_t>(raw_cats));
    int next = -1;
    bool merged = false;
    for (int c = 0; c < raw_cats; ++c) {
      if (freq[k][static_cast<std::size_t>(c)] > 0) ++next;
      map[static_cast<std::size_t>(c)] = std::max(next, 0);
      if (freq[k][static_cast<std::size_t>(c)] == 0) merged = true;
    }
    const int model_cats = next + 1;
    if (model_cats < 2) throw InputError("fit_grm: item " + std::string(kItemColumns[k]) + " shows a single category");
    if (merged) {
      item.score_map = map;
      std::ostringstream note;
      note << "item " << kItemColumns[k] << ": unobserved categories merged, map [";
      for (std::size_t c = 0; c < map.size(); ++c) note << (c ? "," : "") << map[c];
      note << "]";
      model.fit.notes.push_back(note.str());
    }
    item.thresholds.assign(static_cast<std::size_t>(model_cats - 1), 0.0);
  }

  // Unique patterns, in model categories.
  std::map<ItemScores, double> counts;
  for (const auto& row : pooled.rows) {
    ItemScores cat{};
    for (std::size_t k = 0; k < kItemCount; ++k) cat[k] = model.items[k].model_category(row[k]);
    counts[cat] += 1.0;
  }
  std::vector<Pattern> patterns;
  patterns.reserve(counts.size());
  for (const auto& [cats, n] : counts) patterns.push_back({cats, n});

  const QuadratureRule rule = normal_quadrature(options.quadrature_nodes);
  const auto q = rule.nodes.size();

  std::vector<ItemState> state(kItemCount);
  for (std::size_t k = 0; k < kItemCount; ++k) {
    const int cats = model.items[k].categories();
    std::vector<double> cat_freq(static_cast<std::size_t>(cats), 0.0);
    for (const auto& p : patterns) cat_freq[static_cast<std::size_t>(p.categories[k])] += p.count;
    double total = 0;
    for (double f : cat_freq) total += f;
    state[k].a = 1.0;
    state[k].d.resize(static_cast<std::size_t>(cats - 1));
    double upper = total;
    for (int c = 1; c < cats; ++c) {
      upper -= cat_freq[static_cast<std::size_t>(c - 1)];
      const double prop = std::clamp(upper / total, 1e-4, 1.0 - 1e-4);
      state[k].d[static_cast<std::size_t>(c - 1)] = 1.2 * logit(prop);
    }
    for (std::size_t c = 1; c < state[k].d.size(); ++c) {
      if (!(state[k].d[c] < state[k].d[c - 1])) state[k].d[c] = state[k].d[c - 1] - 0.1;
    }
  }

  std::vector<std::vector<double>> log_prob(kItemCount);
  std::vector<std::vector<double>> expected(kItemCount);
  std::vector<double> log_w(q), ll(q), post(q);
  for (std::size_t j = 0; j < q; ++j) log_w[j] = std::log(rule.weights[j]);

  auto e_step = [&](bool accumulate) {
    for (std::size_t k = 0; k < kItemCount; ++k) {
      item_log_probs(state[k], rule.nodes, log_prob[k]);
      if (accumulate) expected[k].assign(log_prob[k].size(), 0.0);
    }
    double total = 0.0;
    for (const auto& p : patterns) {
      ll = log_w;
      for (std::size_t k = 0; k < kItemCount; ++k) {
        const double* row = &log_prob[k][static_cast<std::size_t>(p.categories[k]) * q];
        for (std::size_t j = 0; j < q; ++j) ll[j] += row[j];
      }
      const double peak = *std::max_element(ll.begin(), ll.end());
      double den = 0.0;
      for (std::size_t j = 0; j < q; ++j) {
        post[j] = std::exp(ll[j] - peak);
        den += post[j];
      }
      total += p.count * (peak + std::log(den));
      if (!accumulate) continue;
      const double scale = p.count / den;
      for (std::size_t k = 0; k < kItemCount; ++k) {
        double* row = &expected[k][static_cast<std::size_t>(p.categories[k]) * q];
        for (std::size_t j = 0; j < q; ++j) row[j] += scale * post[j];
      }
    }
    return total;
  };

  GrFitResult result;
  double ll_old = e_step(true);
  result.trace.push_back(ll_old);
  bool converged = false;
  int iter = 0;
  for (iter = 1; iter <= options.max_iterations; ++iter) {
    for (std::size_t k = 0; k < kItemCount; ++k) newton_update(state[k], rule.nodes, expected[k], options.newton_steps);
    const double ll_new = e_step(true);
    result.trace.push_back(ll_new);
    if (ll_new < ll_old - 1e-9 * std::fabs(ll_old)) {
      throw GrFitError("fit_grm: marginal log-likelihood decreased at iteration " + std::to_string(iter), result.trace);
    }
    const double rel = std::fabs(ll_new - ll_old) / std::max(std::fabs(ll_old), 1e-300);
    ll_old = ll_new;
    if (rel < options.relative_tolerance) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw GrFitError("fit_grm: no convergence after " + std::to_string(options.max_iterations) + " iterations",
                     result.trace);
  }

  for (std::size_t k = 0; k < kItemCount; ++k) {
    auto& item = model.items[k];
    item.discrimination = state[k].a;
    for (std::size_t c = 0; c < state[k].d.size(); ++c) item.thresholds[c] = -state[k].d[c] / state[k].a;
  }
  model.fit.log_likelihood = ll_old;
  model.fit.iterations = iter;
  model.fit.rows = pooled.rows.size();
  model.fit.converged = true;
  model.fit.quadrature_nodes = options.quadrature_nodes;
  model.validate();
  result.model = std::move(model);
  return result;
}

double grm_log_likelihood(const GrModel& model, const ResponseRows& rows, int quadrature_nodes) {
  const QuadratureRule rule = normal_quadrature(quadrature_nodes);
  const auto q = rule.nodes.size();
  std::vector<std::vector<double>> lp(model.items.size());
  for (std::size_t k = 0; k < model.items.size(); ++k) {
    const auto& item = model.items[k];
    lp[k].resize(static_cast<std::size_t>(item.categories()) * q);
    for (std::size_t j = 0; j < q; ++j) {
      const auto p = grm_category_probs(item, rule.nodes[j]);
      for (std::size_t c = 0; c < p.size(); ++c) lp[k][c * q + j] = std::log(std::max(p[c], 1e-300));
    }
  }
  double total = 0.0;
  std::vector<double> ll(q);
  for (const auto& row : rows.rows) {
    for (std::size_t j = 0; j < q; ++j) ll[j] = std::log(rule.weights[j]);
    for (std::size_t k = 0; k < model.items.size(); ++k) {
      const auto c = static_cast<std::size_t>(model.items[k].model_category(row[k]));
      for (std::size_t j = 0; j < q; ++j) ll[j] += lp[k][c * q + j];
    }
    const double peak = *std::max_element(ll.begin(), ll.end());
    double s = 0.0;
    for (double v : ll) s += std::exp(v - peak);
    total += peak + std::log(s);
  }
  return total;
}

}  // namespace psprs
