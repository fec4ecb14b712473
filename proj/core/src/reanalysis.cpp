#include "psprs/reanalysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "psprs/ancova.hpp"
#include "psprs/error.hpp"
#include "psprs/marginal.hpp"
#include "psprs/multiplicity.hpp"

namespace psprs {

namespace {

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe mean_se(const std::vector<double>& v) {
  MeanSe out;
  if (v.empty()) return out;
  double s = 0.0;
  for (double x : v) s += x;
  out.mean = s / static_cast<double>(v.size());
  if (v.size() < 2) return out;
  double ss = 0.0;
  for (double x : v) ss += (x - out.mean) * (x - out.mean);
  out.se = std::sqrt(ss / static_cast<double>(v.size() - 1)) / std::sqrt(static_cast<double>(v.size()));
  return out;
}

void add_rows(std::vector<DescriptiveRow>& rows, const std::string& item, const std::vector<double>& base,
              const std::vector<double>& w52, const ItemDataset& data, const std::string& treatment_label,
              const std::string& control_label) {
  std::optional<AncovaFit> fit;
  try {
    fit = fit_ancova(w52, base, data.arm);
  } catch (const std::exception&) {
  }
  for (const Arm a : {Arm::kControl, Arm::kTreatment}) {
    std::vector<double> b, w, d;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (data.arm[i] != a) continue;
      b.push_back(base[i]);
      w.push_back(w52[i]);
      d.push_back(w52[i] - base[i]);
    }
    DescriptiveRow row;
    row.item = item;
    row.arm = a == Arm::kTreatment ? treatment_label : control_label;
    row.n = b.size();
    const auto mb = mean_se(b), mw = mean_se(w), md = mean_se(d);
    row.baseline_mean = mb.mean;
    row.baseline_se = mb.se;
    row.week52_mean = mw.mean;
    row.week52_se = mw.se;
    row.change_mean = md.mean;
    row.change_se = md.se;
    if (a == Arm::kTreatment && fit) {
      row.ancova_coef = fit->coef_treatment;
      row.ancova_se = fit->se;
      row.ancova_p = fit->p_one_sided;
    }
    rows.push_back(std::move(row));
  }
}

}  // namespace

std::vector<DescriptiveRow> descriptive_table(const ItemDataset& data, const std::string& treatment_label,
                                              const std::string& control_label) {
  std::vector<DescriptiveRow> rows;
  for (std::size_t k = 0; k < kItemCount; ++k) {
    add_rows(rows, std::string(kItemAbbreviations[k]), item_column(data.baseline, k), item_column(data.week52, k), data,
             treatment_label, control_label);
  }
  add_rows(rows, "SumS", sum_scores(data.baseline), sum_scores(data.week52), data, treatment_label, control_label);
  return rows;
}

namespace {

template <typename T>
const T* find_for_scheme(const std::vector<T>& v, const std::string& scheme) {
  for (const auto& x : v) {
    if (x.scheme == scheme) return &x;
  }
  return nullptr;
}

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
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
  if (saa <= 0 || sbb <= 0) return std::numeric_limits<double>::quiet_NaN();
  return sab / std::sqrt(saa * sbb);
}

std::uint64_t text_hash(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

ReanalysisReport run_reanalysis(const TrialData& trial, const std::vector<Comparison>& comparisons,
                                const ReanalysisOptions& options) {
  if (comparisons.empty()) throw InputError("reanalysis: no comparisons requested");
  if (options.schemes.empty()) throw InputError("reanalysis: no schemes requested");
  ReanalysisReport report;

  // Datasets in original scoring, one per comparison.
  std::vector<ItemDataset> datasets;
  for (const auto& c : comparisons) {
    ComparisonSummary summary;
    summary.label = c.label();
    ItemDataset d = select_comparison(trial, c.treatment, c.control, &summary.log);
    summary.n_treatment = d.count(Arm::kTreatment);
    summary.n_control = d.count(Arm::kControl);
    if (summary.n_treatment < 2 || summary.n_control < 2) {
      throw InputError("comparison " + c.label() + " has fewer than 2 complete cases in an arm");
    }
    d.validate(ScoringScheme::original());
    report.descriptives.emplace_back(c.label(), descriptive_table(d, c.treatment, c.control));
    report.comparisons.push_back(std::move(summary));
    datasets.push_back(std::move(d));
  }

  const ItemDataset pooled = pooled_complete_cases(trial);
  const bool needs_irt = std::any_of(options.methods.begin(), options.methods.end(),
                                     [](Method m) { return m == Method::kIrt || m == Method::kLmApprox; });

  for (const auto& scheme : options.schemes) {
    scheme.validate();
    TestAuxiliaries aux;
    aux.omnibus_items = options.omnibus_items.get();
    aux.omnibus_domains = options.omnibus_domains.get();
    aux.maxt = options.maxt;

    std::shared_ptr<const EapScorer> scorer;
    std::optional<LinearLatentApprox> approx;
    if (needs_irt) {
      const ItemDataset pooled_scored = apply_rescoring(pooled, scheme);
      const ResponseRows rows = pool_visits(pooled_scored);
      ApproxSummary summary;
      summary.scheme = scheme.name;
      bool have_model = false;
      if (const GrModel* m = find_for_scheme(options.models, scheme.name)) {
        m->validate(scheme);
        scorer = std::make_shared<const EapScorer>(*m, options.grm.quadrature_nodes);
        summary.model_source = "supplied";
        have_model = true;
      } else if (options.allow_self_fit) {
        scorer = std::make_shared<const EapScorer>(fit_grm(rows, scheme, options.grm).model, options.grm.quadrature_nodes);
        summary.model_source = "self-fit";
        have_model = true;
        report.notes.push_back("scheme " + scheme.name +
                               ": the IRT model was fitted on the analysed trial data itself; this may introduce a bias");
      } else {
        report.notes.push_back("scheme " + scheme.name + ": no IRT model supplied and self-fitting disabled");
      }
      if (const LinearLatentApprox* a = find_for_scheme(options.approxes, scheme.name)) {
        approx = *a;
        summary.approx_source = "supplied";
      } else if (have_model) {
        approx = fit_linear_latent_approx(rows.rows, scorer->eap(rows.rows), scheme.name);
        summary.approx_source = "self-fit";
        report.notes.push_back("scheme " + scheme.name +
                               ": the linear latent approximation was fitted on the analysed trial data");
      }
      if (have_model && approx) {
        const auto eap = scorer->eap(rows.rows);
        std::vector<double> lin(rows.rows.size());
        for (std::size_t i = 0; i < rows.rows.size(); ++i) lin[i] = approx_latent(*approx, rows.rows[i]);
        summary.approx = *approx;
        summary.corr_with_eap = correlation(lin, eap);
        report.approximations.push_back(std::move(summary));
      }
    }
    aux.scorer = scorer.get();
    aux.approx = approx ? &*approx : nullptr;

    for (std::size_t c = 0; c < comparisons.size(); ++c) {
      const std::string label = comparisons[c].label();
      const ItemDataset data = apply_rescoring(datasets[c], scheme);
      RngStream rng(mix64(options.seed ^ text_hash(label + "|" + scheme.name)));
      const auto runs = run_methods(data, options.methods, aux, rng);
      std::vector<double> gls_weights;
      for (const auto& run : runs) {
        MethodResult r;
        r.comparison = label;
        r.scheme = scheme.name;
        r.method = std::string(method_name(run.method));
        if (run.outcome) {
          r.statistic = run.outcome->statistic;
          r.p_value = run.outcome->p_one_sided;
          r.warnings = run.outcome->warnings;
          for (auto k : run.outcome->dropped_items) r.dropped_items.emplace_back(kItemColumns[k]);
          if (run.method == Method::kGls) gls_weights = run.outcome->weights;
        } else {
          r.statistic = std::numeric_limits<double>::quiet_NaN();
          r.p_value = std::numeric_limits<double>::quiet_NaN();
          r.error = run.error;
          r.numerical = run.numerical;
        }
        report.methods.push_back(std::move(r));
      }

      try {
        const MarginalFits fits = fit_marginals(data);
        const auto p = fits.p_values();
        const auto holm = holm_adjust(p);
        const auto hommel = hommel_adjust(p);
        if (gls_weights.size() != kItemCount) {
          try {
            const auto gls = test_obrien(analyze_marginals(data), ObrienVariant::kGls);
            gls_weights = gls.weights;
          } catch (const std::exception&) {
            gls_weights.assign(kItemCount, std::numeric_limits<double>::quiet_NaN());
          }
        }
        for (std::size_t k = 0; k < kItemCount; ++k) {
          ItemResult ir;
          ir.comparison = label;
          ir.scheme = scheme.name;
          ir.item = std::string(kItemColumns[k]);
          ir.abbreviation = std::string(kItemAbbreviations[k]);
          ir.coef = fits.per_item[k].coef_treatment;
          ir.se = fits.per_item[k].se;
          ir.t = fits.per_item[k].t_value;
          ir.p = p[k];
          ir.holm = holm[k];
          ir.hommel = hommel[k];
          ir.gls_weight = gls_weights[k];
          report.items.push_back(std::move(ir));
        }
      } catch (const std::exception& e) {
        report.notes.push_back(label + " / " + scheme.name + ": per-item results unavailable: " + e.what());
      }
    }
  }
  return report;
}

}  // namespace psprs
