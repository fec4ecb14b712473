// psprs: simulation study and reanalysis driver.
#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "psprs/error.hpp"
#include "psprs/grm_fit.hpp"
#include "psprs/model_io.hpp"
#include "psprs/omnibus.hpp"
#include "psprs/reanalysis.hpp"
#include "psprs/reference.hpp"
#include "psprs/report.hpp"
#include "psprs/study.hpp"
#include "psprs/trial_csv.hpp"

namespace fs = std::filesystem;
using namespace psprs;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

std::vector<ReportFormat> parse_formats(const std::vector<std::string>& names) {
  std::vector<ReportFormat> out;
  for (const auto& n : names) out.push_back(report_format_from_string(n));
  return out;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
}

std::string join(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

// ---- simulate ----

struct SimulateArgs {
  std::string plan;
  std::string profile;
  std::string out_dir = "results";
  std::vector<std::string> formats = {"csv", "json"};
  unsigned threads = 0;
  std::optional<std::size_t> reps;
  std::optional<std::uint64_t> seed;
  std::string cache_dir;
  bool quiet = false;
};

int run_simulate(const SimulateArgs& a) {
  StudyPlan plan = load_plan(a.plan);
  if (!a.profile.empty()) apply_profile(plan, a.profile);
  if (a.reps) plan.n_reps = *a.reps;
  if (a.seed) plan.master_seed = *a.seed;
  if (!a.cache_dir.empty()) plan.omnibus.cache_dir = a.cache_dir;
  plan.validate();
  const auto formats = parse_formats(a.formats);

  if (!a.quiet) std::cerr << "preparing auxiliaries for plan " << plan.name << "...\n";
  const StudyContext ctx = prepare_study(plan);
  RunOptions opts;
  opts.threads = a.threads;
  opts.enforce_failure_limit = false;
  if (!a.quiet) {
    std::cerr << "running " << plan.scenarios.size() << " scenario(s) x " << plan.n_reps << " replicates on "
              << resolve_thread_count(a.threads) << " thread(s)\n";
  }
  StudyResult result;
  for (const auto& scenario : plan.scenarios) {
    if (!a.quiet) std::cerr << "  scenario " << scenario.label << '\n';
    auto r = run_scenario(plan, ctx, scenario, opts);
    result.table.insert(result.table.end(), r.table.begin(), r.table.end());
    result.failures.insert(result.failures.end(), r.failures.begin(), r.failures.end());
  }
  sort_power_table(result.table);

  ensure_dir(a.out_dir);
  const std::string stem = join(a.out_dir, plan.name);
  for (const auto f : formats) {
    switch (f) {
      case ReportFormat::kCsv:
        write_text_file(stem + "_power.csv", power_table_csv(result.table));
        write_text_file(stem + "_series.csv", power_series_csv(result.table));
        break;
      case ReportFormat::kJson:
        write_text_file(stem + "_power.json", power_table_json(result.table, plan_to_json(plan)));
        break;
      case ReportFormat::kPlain:
        write_text_file(stem + "_power.txt", power_table_plain(result.table));
        break;
    }
  }
  if (!result.failures.empty()) {
    std::string log;
    for (const auto& f : result.failures) {
      log += f.scenario + "," + f.scheme + "," + f.method + "," + std::to_string(f.replicate) + ",\"" + f.message + "\"\n";
    }
    write_text_file(stem + "_failures.csv", "scenario,scheme,method,replicate,message\n" + log);
  }
  if (!a.quiet) std::cout << power_table_plain(result.table);
  check_failure_rate(result.table);
  return 0;
}

// ---- analyze ----

struct AnalyzeArgs {
  std::string csv;
  std::vector<std::string> arm_a;
  std::string arm_b;
  std::vector<std::string> arms;
  std::vector<std::string> schemes = {"original", "fda-collapse"};
  std::vector<std::string> models;
  std::vector<std::string> approxes;
  bool no_self_fit = false;
  std::uint64_t seed = 1;
  double maxt_tol = 1e-4;
  std::size_t omnibus_reps = kDefaultOmnibusReps;
  std::uint64_t omnibus_seed = kDefaultOmnibusSeed;
  std::string transform = "reciprocal";
  std::string cache_dir;
  std::string out_dir;
  std::vector<std::string> formats = {"csv", "json", "plain"};
};

int run_analyze(const AnalyzeArgs& a) {
  const TrialData trial = read_trial_csv(a.csv, a.arms);
  ReanalysisOptions opts;
  opts.schemes.clear();
  for (const auto& s : a.schemes) opts.schemes.push_back(resolve_scheme(s));
  for (const auto& m : a.models) opts.models.push_back(load_grm(m));
  for (const auto& p : a.approxes) opts.approxes.push_back(load_approx(p));
  opts.allow_self_fit = !a.no_self_fit;
  opts.seed = a.seed;
  opts.maxt.tol = a.maxt_tol;
  const auto transform = omnibus_transform_from_string(a.transform);
  opts.omnibus_items = std::make_shared<const OmnibusCalibration>(
      cached_calibration(a.cache_dir, kItemCount, a.omnibus_reps, a.omnibus_seed, transform));
  opts.omnibus_domains = std::make_shared<const OmnibusCalibration>(
      cached_calibration(a.cache_dir, kDomainCount, a.omnibus_reps, a.omnibus_seed, transform));

  std::vector<Comparison> comparisons;
  for (const auto& t : a.arm_a) comparisons.push_back({t, a.arm_b});
  const ReanalysisReport report = run_reanalysis(trial, comparisons, opts);

  for (const auto& c : report.comparisons) {
    for (const auto& [arm, n] : c.log.retained) std::cerr << c.label << ": retained " << n << " in arm " << arm << '\n';
    for (const auto& e : c.log.exclusions) std::cerr << c.label << ": excluded " << e << '\n';
  }
  const auto formats = parse_formats(a.formats);
  // Reports are always written; numerical failures still set exit code 3.
  const auto numerical = std::count_if(report.methods.begin(), report.methods.end(),
                                       [](const MethodResult& r) { return r.numerical; });
  const auto finish = [&]() {
    if (numerical == 0) return 0;
    std::cerr << "error: " << numerical << " method result(s) failed numerically\n";
    return 3;
  };
  if (a.out_dir.empty()) {
    std::cout << reanalysis_plain(report);
    return finish();
  }
  ensure_dir(a.out_dir);
  for (const auto f : formats) {
    switch (f) {
      case ReportFormat::kCsv: {
        write_text_file(join(a.out_dir, "global_tests.csv"), method_results_csv(report.methods));
        write_text_file(join(a.out_dir, "items.csv"), item_results_csv(report.items));
        for (std::size_t i = 0; i < report.descriptives.size(); ++i) {
          write_text_file(join(a.out_dir, "descriptive_" + std::to_string(i + 1) + ".csv"),
                          descriptive_csv(report.descriptives[i].second));
        }
        break;
      }
      case ReportFormat::kJson:
        write_text_file(join(a.out_dir, "results.json"), reanalysis_json(report));
        break;
      case ReportFormat::kPlain: {
        std::string text = reanalysis_plain(report);
        for (const auto& [label, rows] : report.descriptives) text += "\n" + label + "\n" + descriptive_plain(rows);
        write_text_file(join(a.out_dir, "report.txt"), text);
        break;
      }
    }
  }
  std::cout << reanalysis_plain(report);
  return finish();
}

// ---- fit-irt / fit-approx ----

struct FitIrtArgs {
  std::string csv;
  std::string scheme = "original";
  std::string out = "grm.json";
  int nodes = kDefaultQuadratureNodes;
  int max_iterations = 500;
};

ResponseRows trial_rows(const std::string& csv, const ScoringScheme& scheme, std::size_t* subjects) {
  const TrialData trial = read_trial_csv(csv);
  CompleteCaseLog log;
  const ItemDataset pooled = pooled_complete_cases(trial, &log);
  for (const auto& e : log.exclusions) std::cerr << "excluded " << e << '\n';
  if (subjects != nullptr) *subjects = pooled.size();
  return pool_visits(apply_rescoring(pooled, scheme));
}

int run_fit_irt(const FitIrtArgs& a) {
  const ScoringScheme scheme = resolve_scheme(a.scheme);
  std::size_t subjects = 0;
  const ResponseRows rows = trial_rows(a.csv, scheme, &subjects);
  GrFitOptions opts;
  opts.quadrature_nodes = a.nodes;
  opts.max_iterations = a.max_iterations;
  const GrFitResult fit = fit_grm(rows, scheme, opts);
  save_grm(fit.model, a.out);
  std::cout << "fitted " << scheme.name << " graded-response model on " << rows.rows.size() << " rows (" << subjects
            << " subjects): log-likelihood " << fit.model.fit.log_likelihood << " after " << fit.model.fit.iterations
            << " iterations -> " << a.out << '\n';
  for (const auto& n : fit.model.fit.notes) std::cout << "note: " << n << '\n';
  return 0;
}

struct FitApproxArgs {
  std::string csv;
  std::string model;
  std::string out = "approx.json";
};

int run_fit_approx(const FitApproxArgs& a) {
  const GrModel model = load_grm(a.model);
  const ScoringScheme scheme = resolve_scheme(model.scheme);
  const ResponseRows rows = trial_rows(a.csv, scheme, nullptr);
  const EapScorer scorer(model, model.fit.quadrature_nodes > 0 ? model.fit.quadrature_nodes : kDefaultQuadratureNodes);
  const auto thetas = scorer.eap(rows.rows);
  const LinearLatentApprox approx = fit_linear_latent_approx(rows.rows, thetas, model.scheme);
  save_approx(approx, a.out);
  std::cout << "linear latent approximation [" << approx.scheme << "]: R^2 = " << approx.r_squared << " -> " << a.out
            << '\n';
  return 0;
}

// ---- calibrate-omnibus ----

struct CalibrateArgs {
  std::size_t m = kItemCount;
  std::size_t reps = kDefaultOmnibusReps;
  std::uint64_t seed = kDefaultOmnibusSeed;
  std::string transform = "reciprocal";
  std::string out;
  std::string cache_dir;
};

int run_calibrate(const CalibrateArgs& a) {
  const auto t = omnibus_transform_from_string(a.transform);
  if (a.out.empty() && a.cache_dir.empty()) throw InputError("calibrate-omnibus needs --out or --cache-dir");
  OmnibusCalibration c;
  if (!a.cache_dir.empty()) {
    c = cached_calibration(a.cache_dir, a.m, a.reps, a.seed, t);
    std::cout << "cached " << join(a.cache_dir, calibration_file_name(a.m, t, a.reps, a.seed)) << '\n';
  } else {
    c = calibrate_omnibus(a.m, a.reps, a.seed, t);
  }
  if (!a.out.empty()) {
    save_calibration(c, a.out);
    std::cout << "wrote " << a.out << '\n';
  }
  std::cout << "m=" << c.m << " transform=" << to_string(c.transform) << " reps=" << c.reps << " seed=" << c.seed
            << " null 2.5% quantile of the combined statistic: " << c.sorted_null_stats[c.reps / 40] << '\n';
  return 0;
}

// ---- rescore / reference ----

struct RescoreArgs {
  std::string csv;
  std::string scheme = "fda-collapse";
  std::string out;
};

int run_rescore(const RescoreArgs& a) {
  const ScoringScheme scheme = resolve_scheme(a.scheme);
  const TrialData rescored = rescore_trial(read_trial_csv(a.csv), scheme);
  if (a.out.empty()) {
    std::cout << format_trial_csv(rescored);
  } else {
    write_trial_csv(rescored, a.out);
  }
  return 0;
}

struct ReferenceArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

int run_reference(const ReferenceArgs& a) {
  ReferenceConfig cfg = a.config.empty() ? ReferenceConfig{} : load_reference_config(a.config);
  if (a.seed) cfg.seed = *a.seed;
  const ItemDataset pool = build_synthetic_reference(cfg);
  // Arm labels are nominal: the reference pool carries no treatment effect.
  const std::string text = format_trial_csv(pool, "pool-b", "pool-a");
  if (a.out.empty()) {
    std::cout << text;
  } else {
    write_text_file(a.out, text);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"psprs - global tests for multi-item ordinal endpoints: simulation study and reanalysis"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "psprs 0.1.0");

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Run a simulation plan and write power tables");
  c_sim->add_option("plan", sim.plan, "Plan file (JSON)")->required()->check(CLI::ExistingFile);
  c_sim->add_option("--profile", sim.profile, "full (as written) or desk (2000 replicates)");
  c_sim->add_option("--out", sim.out_dir, "Output directory")->capture_default_str();
  c_sim->add_option("--format", sim.formats, "csv, json and/or plain")->capture_default_str();
  c_sim->add_option("--threads", sim.threads, "Worker threads (0: PSPRS_THREADS or hardware)");
  c_sim->add_option("--reps", sim.reps, "Override the plan's replicate count");
  c_sim->add_option("--seed", sim.seed, "Override the plan's master seed");
  c_sim->add_option("--cache-dir", sim.cache_dir, "Omnibus calibration cache directory");
  c_sim->add_flag("--quiet", sim.quiet, "Suppress progress and the summary table");

  AnalyzeArgs ana;
  auto* c_ana = app.add_subcommand("analyze", "Reanalyse a trial CSV with all global tests");
  c_ana->add_option("csv", ana.csv, "Trial CSV")->required()->check(CLI::ExistingFile);
  c_ana->add_option("--arm-a", ana.arm_a, "Treatment arm label (repeatable: one comparison each)")->required();
  c_ana->add_option("--arm-b", ana.arm_b, "Control arm label")->required();
  c_ana->add_option("--arms", ana.arms, "Declared arm labels; any other label is an error");
  c_ana->add_option("--scheme", ana.schemes, "Scoring scheme(s): original, fda-collapse or a scheme file")->capture_default_str();
  c_ana->add_option("--model", ana.models, "Fitted GR model file(s), matched to schemes by their scheme tag");
  c_ana->add_option("--approx", ana.approxes, "Linear latent approximation file(s)");
  c_ana->add_flag("--no-self-fit", ana.no_self_fit, "Never fit IRT models on the analysed data");
  c_ana->add_option("--seed", ana.seed, "Seed for the MaxT integration")->capture_default_str();
  c_ana->add_option("--maxt-tol", ana.maxt_tol, "MVN integration tolerance")->capture_default_str();
  c_ana->add_option("--omnibus-reps", ana.omnibus_reps, "Omnibus calibration replicates")->capture_default_str();
  c_ana->add_option("--omnibus-seed", ana.omnibus_seed, "Omnibus calibration seed")->capture_default_str();
  c_ana->add_option("--transform", ana.transform, "Omnibus transform: reciprocal or neglog")->capture_default_str();
  c_ana->add_option("--cache-dir", ana.cache_dir, "Omnibus calibration cache directory");
  c_ana->add_option("--out", ana.out_dir, "Output directory (default: print only)");
  c_ana->add_option("--format", ana.formats, "csv, json and/or plain")->capture_default_str();

  FitIrtArgs fit;
  auto* c_fit = app.add_subcommand("fit-irt", "Fit a graded-response model on pooled visits of a trial CSV");
  c_fit->add_option("csv", fit.csv, "Trial CSV")->required()->check(CLI::ExistingFile);
  c_fit->add_option("--scheme", fit.scheme, "Scoring scheme")->capture_default_str();
  c_fit->add_option("--out", fit.out, "Model file to write")->capture_default_str();
  c_fit->add_option("--nodes", fit.nodes, "Gauss-Hermite nodes")->capture_default_str();
  c_fit->add_option("--max-iter", fit.max_iterations, "EM iteration limit")->capture_default_str();

  FitApproxArgs fa;
  auto* c_fa = app.add_subcommand("fit-approx", "Fit the weighted-sum approximation of the EAP latent trait");
  c_fa->add_option("csv", fa.csv, "Trial CSV")->required()->check(CLI::ExistingFile);
  c_fa->add_option("--model", fa.model, "GR model file")->required()->check(CLI::ExistingFile);
  c_fa->add_option("--out", fa.out, "Approximation file to write")->capture_default_str();

  CalibrateArgs cal;
  auto* c_cal = app.add_subcommand("calibrate-omnibus", "Monte-Carlo null calibration of the Omnibus test");
  c_cal->add_option("--m", cal.m, "Number of p-values")->capture_default_str();
  c_cal->add_option("--reps", cal.reps, "Null replicates")->capture_default_str();
  c_cal->add_option("--seed", cal.seed, "Seed")->capture_default_str();
  c_cal->add_option("--transform", cal.transform, "reciprocal or neglog")->capture_default_str();
  c_cal->add_option("--out", cal.out, "Calibration file to write");
  c_cal->add_option("--cache-dir", cal.cache_dir, "Store under the keyed name in this directory");

  RescoreArgs res;
  auto* c_res = app.add_subcommand("rescore", "Apply a scoring scheme to a trial CSV");
  c_res->add_option("csv", res.csv, "Trial CSV")->required()->check(CLI::ExistingFile);
  c_res->add_option("--scheme", res.scheme, "Scoring scheme")->capture_default_str();
  c_res->add_option("--out", res.out, "Output CSV (default: stdout)");

  ReferenceArgs ref;
  auto* c_ref = app.add_subcommand("reference", "Write the synthetic reference pool as a trial CSV");
  c_ref->add_option("--config", ref.config, "Reference configuration (JSON)")->check(CLI::ExistingFile);
  c_ref->add_option("--seed", ref.seed, "Override the configured seed");
  c_ref->add_option("--out", ref.out, "Output CSV (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (c_sim->parsed()) return run_simulate(sim);
    if (c_ana->parsed()) return run_analyze(ana);
    if (c_fit->parsed()) return run_fit_irt(fit);
    if (c_fa->parsed()) return run_fit_approx(fa);
    if (c_cal->parsed()) return run_calibrate(cal);
    if (c_res->parsed()) return run_rescore(res);
    if (c_ref->parsed()) return run_reference(ref);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  }
  return 0;
}
