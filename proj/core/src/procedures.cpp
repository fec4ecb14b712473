#include "psprs/procedures.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <sstream>

#include "psprs/ancova.hpp"
#include "psprs/distributions.hpp"
#include "psprs/error.hpp"
#include "psprs/linalg.hpp"
#include "psprs/multiplicity.hpp"

namespace psprs {

namespace {

constexpr std::array<std::string_view, 11> kMethodNames = {
    "SumS", "IRT-PSIF", "LM-PSIBPF", "OLS", "GLS", "GLS-drop", "Bonf", "MaxT", "Simes", "Omnibus", "Omnibus-dom"};

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string fmt(double x) {
  std::ostringstream o;
  o.precision(17);
  o << x;
  return o.str();
}

TestOutcome from_ancova(std::string_view method, const AncovaFit& fit) {
  TestOutcome out;
  out.method = std::string(method);
  out.statistic = fit.t_value;
  out.p_one_sided = fit.p_one_sided;
  out.note("coef", fmt(fit.coef_treatment));
  out.note("se", fmt(fit.se));
  out.note("df", fmt(fit.df));
  return out;
}

double clamp01(double p) { return std::clamp(p, 0.0, 1.0); }

}  // namespace

std::string_view method_name(Method m) { return kMethodNames[static_cast<std::size_t>(m)]; }

Method method_from_name(std::string_view name) {
  const std::string key = lower(name);
  for (std::size_t i = 0; i < kMethodNames.size(); ++i) {
    if (lower(kMethodNames[i]) == key) return kAllMethods[i];
  }
  std::string allowed;
  for (auto n : kMethodNames) allowed += (allowed.empty() ? "" : ", ") + std::string(n);
  throw InputError("unknown method '" + std::string(name) + "'; expected one of " + allowed);
}

MarginalAnalysis analyze_marginals(const ItemDataset& data) {
  MarginalAnalysis ma;
  ma.fits = fit_marginals(data);
  ma.corr = estimate_corr(data, ma.fits);
  return ma;
}

TestOutcome test_sum_score(const ItemDataset& data) {
  const auto base = sum_scores(data.baseline);
  const auto w52 = sum_scores(data.week52);
  return from_ancova(method_name(Method::kSumScore), fit_ancova(w52, base, data.arm));
}

TestOutcome test_irt(const ItemDataset& data, const EapScorer& scorer) {
  if (scorer.model().scheme != data.scheme) {
    throw InputError("IRT model was fitted under scheme '" + scorer.model().scheme + "' but the data use '" +
                     data.scheme + "'");
  }
  const auto base = scorer.eap(data.baseline);
  const auto w52 = scorer.eap(data.week52);
  return from_ancova(method_name(Method::kIrt), fit_ancova(w52, base, data.arm));
}

TestOutcome test_lm_approx(const ItemDataset& data, const LinearLatentApprox& approx) {
  if (approx.scheme != data.scheme) {
    throw InputError("latent approximation was fitted under scheme '" + approx.scheme + "' but the data use '" +
                     data.scheme + "'");
  }
  std::vector<double> base(data.size()), w52(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    base[i] = approx_latent(approx, data.baseline[i]);
    w52[i] = approx_latent(approx, data.week52[i]);
  }
  return from_ancova(method_name(Method::kLmApprox), fit_ancova(w52, base, data.arm));
}

namespace {

void require_finite_t(const Vector& t) {
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    if (!std::isfinite(t(i))) {
      throw NumericalError("item " + std::string(kItemColumns[static_cast<std::size_t>(i)]) +
                           " has a degenerate (perfect-fit) marginal ANCOVA");
    }
  }
}

// w = R^-1 1 via Cholesky; SingularDesignError when R is not positive definite.
Vector gls_weights(const Matrix& r) {
  Matrix l;
  try {
    l = cholesky(r);
  } catch (const FactorizationError& e) {
    throw SingularDesignError("estimated correlation matrix is singular (pivot " + std::to_string(e.pivot()) + ")");
  }
  const Vector ones = Vector::Ones(r.rows());
  const Vector y = l.triangularView<Eigen::Lower>().solve(ones);
  return l.transpose().triangularView<Eigen::Upper>().solve(y);
}

double standardized_sum(const Vector& w, const Vector& t, const Matrix& r) {
  const double var = w.dot(r * w);
  if (!(var > 0.0)) throw SingularDesignError("non-positive variance of the weighted t sum");
  return w.dot(t) / std::sqrt(var);
}

}  // namespace

TestOutcome test_obrien(const MarginalAnalysis& ma, ObrienVariant variant) {
  const Vector& t = ma.fits.t_vector;
  const Matrix& r = ma.corr.corr;
  if (r.rows() != t.size()) throw InputError("test_obrien: correlation and t-vector dimensions differ");
  require_finite_t(t);
  const auto m = static_cast<std::size_t>(t.size());
  TestOutcome out;
  const double n = ma.fits.n_per_group;

  if (variant == ObrienVariant::kOls) {
    out.method = std::string(method_name(Method::kOls));
    out.statistic = standardized_sum(Vector::Ones(t.size()), t, r);
    const double df = obrien_df(n, m);
    out.p_one_sided = clamp01(student_t_cdf(out.statistic, df));
    out.note("df", fmt(df));
    return out;
  }

  Vector w = gls_weights(r);
  out.method = std::string(method_name(variant == ObrienVariant::kGls ? Method::kGls : Method::kGlsDrop));
  if (variant == ObrienVariant::kGls) {
    out.statistic = standardized_sum(w, t, r);
    const double df = obrien_df(n, m);
    out.p_one_sided = clamp01(student_t_cdf(out.statistic, df));
    out.weights.assign(w.data(), w.data() + w.size());
    out.note("df", fmt(df));
    return out;
  }

  Eigen::Index worst = 0;
  const double min_w = w.minCoeff(&worst);
  if (!(min_w < 0.0)) {
    out.statistic = standardized_sum(w, t, r);
    const double df = obrien_df(n, m);
    out.p_one_sided = clamp01(student_t_cdf(out.statistic, df));
    out.weights.assign(w.data(), w.data() + w.size());
    out.note("df", fmt(df));
    out.note("drop", "no negative weight; identical to GLS");
    return out;
  }
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    if (i != worst) keep.push_back(i);
  }
  const auto k = static_cast<Eigen::Index>(keep.size());
  Vector t_sub(k);
  Matrix r_sub(k, k);
  for (Eigen::Index a = 0; a < k; ++a) {
    t_sub(a) = t(keep[static_cast<std::size_t>(a)]);
    for (Eigen::Index b = 0; b < k; ++b) r_sub(a, b) = r(keep[static_cast<std::size_t>(a)], keep[static_cast<std::size_t>(b)]);
  }
  const Vector w_sub = gls_weights(r_sub);
  out.statistic = standardized_sum(w_sub, t_sub, r_sub);
  const double df = obrien_df(n, m - 1);
  out.p_one_sided = clamp01(student_t_cdf(out.statistic, df));
  out.weights.assign(w_sub.data(), w_sub.data() + w_sub.size());
  out.dropped_items.push_back(static_cast<std::size_t>(worst));
  out.note("df", fmt(df));
  out.note("drop", std::string(kItemColumns[static_cast<std::size_t>(worst)]) + " (weight " + fmt(min_w) + ")");
  if ((w_sub.array() < 0.0).any()) {
    std::string items;
    for (Eigen::Index a = 0; a < k; ++a) {
      if (w_sub(a) < 0.0) {
        items += (items.empty() ? "" : ", ") + std::string(kItemColumns[static_cast<std::size_t>(keep[static_cast<std::size_t>(a)])]);
      }
    }
    out.warnings.push_back("negative GLS weights remain after dropping one item: " + items);
  }
  return out;
}

TestOutcome test_bonferroni(const MarginalFits& fits) {
  const auto p = fits.p_values();
  TestOutcome out;
  out.method = std::string(method_name(Method::kBonferroni));
  out.statistic = *std::min_element(p.begin(), p.end());
  out.p_one_sided = bonferroni_global(p);
  out.per_item_p = bonferroni_adjust(p);
  out.adjusted.emplace_back("holm", holm_adjust(p));
  out.adjusted.emplace_back("raw", p);
  return out;
}

TestOutcome test_simes_hommel(const MarginalFits& fits) {
  const auto p = fits.p_values();
  TestOutcome out;
  out.method = std::string(method_name(Method::kSimes));
  out.p_one_sided = simes_global(p);
  out.statistic = out.p_one_sided;
  out.per_item_p = hommel_adjust(p);
  out.adjusted.emplace_back("raw", p);
  return out;
}

TestOutcome test_omnibus(std::span<const double> p, const OmnibusCalibration& calib) {
  const OmnibusResult r = omnibus_test(p, calib);
  TestOutcome out;
  out.method = std::string(method_name(Method::kOmnibus));
  out.statistic = r.statistic;
  out.p_one_sided = clamp01(r.p_value);
  out.per_item_p.assign(p.begin(), p.end());
  out.adjusted.emplace_back("partial_sum_p", r.partial_p);
  out.note("transform", to_string(calib.transform));
  out.note("calibration_reps", std::to_string(calib.reps));
  return out;
}

TestOutcome test_omnibus_domains(const ItemDataset& data, const OmnibusCalibration& calib) {
  if (calib.m != kDomainCount) {
    throw InputError("domain Omnibus needs a calibration with m=3, got m=" + std::to_string(calib.m));
  }
  std::vector<double> p(kDomainCount);
  for (std::size_t d = 0; d < kDomainCount; ++d) {
    const auto dom = static_cast<Domain>(d);
    p[d] = fit_ancova(domain_scores(data.week52, dom), domain_scores(data.baseline, dom), data.arm).p_one_sided;
  }
  TestOutcome out = test_omnibus(p, calib);
  out.method = std::string(method_name(Method::kOmnibusDomains));
  return out;
}

TestOutcome test_maxt(const MarginalAnalysis& ma, const MvnOptions& options, RngStream& rng) {
  const auto& per_item = ma.fits.per_item;
  const auto m = static_cast<Eigen::Index>(per_item.size());
  Vector z(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double p = per_item[static_cast<std::size_t>(i)].p_one_sided;
    if (p <= 0.0) {
      z(i) = std::numeric_limits<double>::infinity();
    } else if (p >= 1.0) {
      z(i) = -std::numeric_limits<double>::infinity();
    } else {
      z(i) = -normal_quantile(p);
    }
  }
  const double z_max = z.maxCoeff();
  TestOutcome out;
  out.method = std::string(method_name(Method::kMaxT));
  out.statistic = z_max;
  const MvnProbability prob = mvn_rect_upper(Vector::Constant(m, z_max), ma.corr.corr, options, rng);
  out.p_one_sided = clamp01(1.0 - prob.value);
  out.note("mvn_error", fmt(prob.error));
  out.note("mvn_evaluations", std::to_string(prob.evaluations));
  if (!prob.converged) out.warnings.push_back("MVN integration stopped at the evaluation cap before reaching tol");
  if (prob.repaired) out.warnings.push_back("correlation matrix needed an eigenvalue floor");
  return out;
}

std::vector<MethodRun> run_methods(const ItemDataset& data, std::span<const Method> methods, const TestAuxiliaries& aux,
                                   RngStream& rng) {
  std::vector<MethodRun> runs;
  runs.reserve(methods.size());

  std::optional<MarginalFits> fits;
  std::optional<MarginalAnalysis> full;
  auto need_fits = [&]() -> const MarginalFits& {
    if (!fits) fits = fit_marginals(data);
    return *fits;
  };
  auto need_full = [&]() -> const MarginalAnalysis& {
    if (!full) {
      MarginalAnalysis ma;
      ma.fits = need_fits();
      ma.corr = estimate_corr(data, ma.fits);
      full = std::move(ma);
    }
    return *full;
  };
  auto require = [](const void* ptr, Method m) {
    if (ptr == nullptr) throw InputError(std::string(method_name(m)) + " requires an auxiliary input that was not supplied");
  };

  for (const Method m : methods) {
    MethodRun run{m, std::nullopt, {}, false};
    try {
      switch (m) {
        case Method::kSumScore:
          run.outcome = test_sum_score(data);
          break;
        case Method::kIrt:
          require(aux.scorer, m);
          run.outcome = test_irt(data, *aux.scorer);
          break;
        case Method::kLmApprox:
          require(aux.approx, m);
          run.outcome = test_lm_approx(data, *aux.approx);
          break;
        case Method::kOls:
          run.outcome = test_obrien(need_full(), ObrienVariant::kOls);
          break;
        case Method::kGls:
          run.outcome = test_obrien(need_full(), ObrienVariant::kGls);
          break;
        case Method::kGlsDrop:
          run.outcome = test_obrien(need_full(), ObrienVariant::kGlsDrop);
          break;
        case Method::kBonferroni:
          run.outcome = test_bonferroni(need_fits());
          break;
        case Method::kMaxT:
          run.outcome = test_maxt(need_full(), aux.maxt, rng);
          break;
        case Method::kSimes:
          run.outcome = test_simes_hommel(need_fits());
          break;
        case Method::kOmnibus: {
          require(aux.omnibus_items, m);
          const auto p = need_fits().p_values();
          run.outcome = test_omnibus(p, *aux.omnibus_items);
          break;
        }
        case Method::kOmnibusDomains:
          require(aux.omnibus_domains, m);
          run.outcome = test_omnibus_domains(data, *aux.omnibus_domains);
          break;
      }
    } catch (const NumericalError& e) {
      run.error = e.what();
      run.numerical = true;
    } catch (const InputError& e) {
      run.error = e.what();
    }
    runs.push_back(std::move(run));
  }
  return runs;
}

}  // namespace psprs
