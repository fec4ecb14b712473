#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "psprs/generators.hpp"
#include "psprs/grm.hpp"
#include "psprs/grm_fit.hpp"
#include "psprs/latent_approx.hpp"
#include "psprs/omnibus.hpp"
#include "psprs/procedures.hpp"
#include "psprs/reference.hpp"
#include "psprs/scoring.hpp"

namespace psprs {

enum class GeneratorKind { kMvn, kBootstrap, kIrt };

std::string to_string(GeneratorKind g);
/// "mvn", "bootstrap" or "irt". Throws InputError.
GeneratorKind generator_from_string(const std::string& s);

struct OmnibusSettings {
  std::size_t reps = kDefaultOmnibusReps;
  std::uint64_t seed = kDefaultOmnibusSeed;
  OmnibusTransform transform = OmnibusTransform::kReciprocal;
  /// Empty disables the on-disk cache.
  std::string cache_dir;
};

struct StudyPlan {
  std::string name = "study";
  GeneratorKind generator = GeneratorKind::kMvn;
  std::vector<EffectScenario> scenarios;
  /// Scheme names or scheme-file paths, resolved with resolve_scheme.
  std::vector<std::string> schemes = {"original"};
  std::vector<Method> methods{kAllMethods.begin(), kAllMethods.end()};
  std::size_t n_per_group = 70;
  std::size_t n_reps = 10000;
  double alpha = 0.025;
  std::uint64_t master_seed = 20240101;
  double maxt_tol = 1e-4;
  OmnibusSettings omnibus;
  ReferenceConfig reference;
  IrtPopulationParams irt_population;
  bool bootstrap_replace = false;
  int quadrature_nodes = kDefaultQuadratureNodes;

  /// Throws ConfigError: n_reps >= 100, alpha in (0, 0.5), scenarios match
  /// the generator kind, at least one scheme and method.
  void validate() const;
};

/// Parses a plan document. Relative paths inside it (reference config,
/// scheme files, cache dir) are resolved against base_dir.
StudyPlan plan_from_json(const std::string& text, const std::string& base_dir = ".");
StudyPlan load_plan(const std::string& path);
std::string plan_to_json(const StudyPlan& plan);

/// "full" keeps the plan; "desk" sets n_reps = 2000. Throws InputError.
void apply_profile(StudyPlan& plan, const std::string& profile);

/// Auxiliaries fitted for one scoring scheme.
struct SchemeAuxiliaries {
  ScoringScheme scheme;
  std::shared_ptr<const EapScorer> scorer;
  std::optional<LinearLatentApprox> approx;
};

/// Read-only inputs shared by all replicates of a plan.
struct StudyContext {
  ReferenceConfig reference;
  ItemDataset pool;
  DiscretizedMvnParams mvn_params;
  std::shared_ptr<const MvnSpec> mvn_spec;
  /// Original-scheme model used by the IRT generator.
  std::shared_ptr<const GrModel> generating_model;
  std::vector<SchemeAuxiliaries> schemes;
  std::shared_ptr<const OmnibusCalibration> omnibus_items;
  std::shared_ptr<const OmnibusCalibration> omnibus_domains;

  /// Throws InputError for an unprepared scheme.
  const SchemeAuxiliaries& scheme(const std::string& name) const;
};

struct PrepareOptions {
  /// Fit the per-scheme IRT models and latent approximations even if no
  /// requested method needs them.
  bool force_irt = false;
  GrFitOptions grm;
};

/// Builds the synthetic reference pool, estimates the MVN parameters, fits a
/// graded-response model and linear latent approximation per scheme (on the
/// pooled visits of the rescored reference) and calibrates the Omnibus
/// tables for m = 10 and m = 3.
StudyContext prepare_study(const StudyPlan& plan, const PrepareOptions& options = {});

struct PowerRow {
  std::string generator;
  std::string scenario;
  std::string scheme;
  std::string method;
  double rejection_rate = 0.0;
  double mc_se = 0.0;
  std::size_t n_reps = 0;
  std::size_t rejections = 0;
  std::size_t failures = 0;
};

using PowerTable = std::vector<PowerRow>;

/// sqrt(r (1 - r) / n).
double mc_se(double rate, std::size_t n_reps);

/// Natural-order sort on (generator, scenario, scheme, method).
void sort_power_table(PowerTable& table);

struct FailureRecord {
  std::string scenario;
  std::string scheme;
  std::string method;
  std::size_t replicate = 0;
  std::string message;
};

struct StudyResult {
  PowerTable table;
  std::vector<FailureRecord> failures;
};

struct RunOptions {
  /// 0 selects PSPRS_THREADS from the environment, else the hardware count.
  unsigned threads = 0;
  /// Throw when any cell fails in more than 1% of replicates.
  bool enforce_failure_limit = true;
  std::function<void(std::size_t done, std::size_t total)> progress;
};

unsigned resolve_thread_count(unsigned requested);

/// FNV-1a hash of the scenario label; identifies a scenario in seed
/// derivation independent of its position in the plan.
std::uint64_t scenario_key(const EffectScenario& scenario);

/// mix64(mix64(master) ^ mix64(scenario_id + c) + rep * golden): for a fixed
/// (master, scenario) the map rep -> seed is a bijection, so seeds of one
/// scenario never collide.
std::uint64_t derive_replicate_seed(std::uint64_t master, std::uint64_t scenario_id, std::uint64_t rep);

/// Runs every replicate of one scenario. Rows come back sorted.
StudyResult run_scenario(const StudyPlan& plan, const StudyContext& context, const EffectScenario& scenario,
                         const RunOptions& options = {});

/// All scenarios of the plan; throws NumericalError after aggregation when a
/// cell exceeds the 1% failure limit (if enforced).
StudyResult run_plan(const StudyPlan& plan, const StudyContext& context, const RunOptions& options = {});

/// Throws NumericalError naming the worst cell when failures / n_reps > 0.01.
void check_failure_rate(const PowerTable& table);

}  // namespace psprs
