#include "psprs/study.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <mutex>
#include <sstream>
#include <thread>

#include "psprs/error.hpp"

namespace psprs {

using nlohmann::json;
namespace fs = std::filesystem;

std::string to_string(GeneratorKind g) {
  switch (g) {
    case GeneratorKind::kMvn:
      return "mvn";
    case GeneratorKind::kBootstrap:
      return "bootstrap";
    case GeneratorKind::kIrt:
      return "irt";
  }
  return "unknown";
}

GeneratorKind generator_from_string(const std::string& s) {
  if (s == "mvn") return GeneratorKind::kMvn;
  if (s == "bootstrap") return GeneratorKind::kBootstrap;
  if (s == "irt") return GeneratorKind::kIrt;
  throw InputError("unknown generator '" + s + "' (expected mvn, bootstrap or irt)");
}

void StudyPlan::validate() const {
  if (n_reps < 100) throw ConfigError("plan " + name + ": n_reps must be >= 100");
  if (!(alpha > 0.0 && alpha < 0.5)) throw ConfigError("plan " + name + ": alpha must lie in (0, 0.5)");
  if (n_per_group < 4) throw ConfigError("plan " + name + ": n_per_group must be >= 4");
  if (scenarios.empty()) throw ConfigError("plan " + name + ": no scenarios");
  if (schemes.empty()) throw ConfigError("plan " + name + ": no schemes");
  if (methods.empty()) throw ConfigError("plan " + name + ": no methods");
  if (!(maxt_tol > 0.0 && maxt_tol <= 0.01)) throw ConfigError("plan " + name + ": maxt_tol must lie in (0, 0.01]");
  if (quadrature_nodes < 5) throw ConfigError("plan " + name + ": quadrature_nodes must be >= 5");
  const auto want = generator == GeneratorKind::kIrt ? EffectScenario::Kind::kSlopeRatio : EffectScenario::Kind::kItemShift;
  for (const auto& s : scenarios) {
    if (s.kind != want) {
      throw ConfigError("plan " + name + ": scenario " + s.label + " does not fit the " + to_string(generator) +
                        " generator");
    }
    s.validate();
  }
  irt_population.validate();
  reference.validate();
}

namespace {

std::string resolve_path(const std::string& p, const std::string& base_dir) {
  const fs::path path(p);
  if (p.empty() || path.is_absolute() || base_dir.empty()) return p;
  return (fs::path(base_dir) / path).lexically_normal().string();
}

bool is_builtin_scheme(const std::string& s) { return s == "original" || s == "fda-collapse" || s == "fda"; }

EffectScenario scenario_from_json(const json& j) {
  if (j.is_string()) return EffectScenario::builtin(j.get<std::string>());
  if (j.is_number()) return EffectScenario::slope_ratio(j.get<double>());
  if (!j.is_object()) throw ConfigError("plan: scenario entries must be strings, numbers or objects");
  if (j.contains("rho")) return EffectScenario::slope_ratio(j.at("rho").get<double>());
  if (!j.contains("d")) throw ConfigError("plan: scenario object needs 'd' or 'rho'");
  const auto& d = j.at("d");
  if (!d.is_array() || d.size() != kItemCount) throw ConfigError("plan: scenario 'd' must have 10 entries");
  std::array<double, kItemCount> v{};
  for (std::size_t k = 0; k < kItemCount; ++k) v[k] = d[k].get<double>();
  return EffectScenario::item_shift(j.value("label", std::string("custom")), v);
}

json scenario_to_json(const EffectScenario& s) {
  if (s.kind == EffectScenario::Kind::kSlopeRatio) return json{{"rho", s.rho}};
  try {
    const auto b = EffectScenario::builtin(s.label);
    if (b.kind == s.kind && b.d == s.d) return s.label;
  } catch (const InputError&) {
  }
  return json{{"label", s.label}, {"d", s.d}};
}

}  // namespace

StudyPlan plan_from_json(const std::string& text, const std::string& base_dir) {
  StudyPlan plan;
  std::string profile;
  try {
    const json doc = json::parse(text);
    if (!doc.is_object()) throw ConfigError("plan: document must be an object");
    for (const auto& [key, v] : doc.items()) {
      if (key == "name") {
        plan.name = v.get<std::string>();
      } else if (key == "generator") {
        plan.generator = generator_from_string(v.get<std::string>());
      } else if (key == "scenarios") {
        plan.scenarios.clear();
        for (const auto& s : v) plan.scenarios.push_back(scenario_from_json(s));
      } else if (key == "schemes") {
        plan.schemes.clear();
        for (const auto& s : v) {
          const auto name = s.get<std::string>();
          plan.schemes.push_back(is_builtin_scheme(name) ? name : resolve_path(name, base_dir));
        }
      } else if (key == "methods") {
        plan.methods.clear();
        if (v.is_string() && v.get<std::string>() == "all") {
          plan.methods.assign(kAllMethods.begin(), kAllMethods.end());
        } else {
          for (const auto& m : v) plan.methods.push_back(method_from_name(m.get<std::string>()));
        }
      } else if (key == "n_per_group") {
        plan.n_per_group = v.get<std::size_t>();
      } else if (key == "n_reps") {
        plan.n_reps = v.get<std::size_t>();
      } else if (key == "alpha") {
        plan.alpha = v.get<double>();
      } else if (key == "master_seed") {
        plan.master_seed = v.get<std::uint64_t>();
      } else if (key == "maxt_tol") {
        plan.maxt_tol = v.get<double>();
      } else if (key == "quadrature_nodes") {
        plan.quadrature_nodes = v.get<int>();
      } else if (key == "bootstrap_replace") {
        plan.bootstrap_replace = v.get<bool>();
      } else if (key == "profile") {
        profile = v.get<std::string>();
      } else if (key == "omnibus") {
        for (const auto& [ok, ov] : v.items()) {
          if (ok == "reps") {
            plan.omnibus.reps = ov.get<std::size_t>();
          } else if (ok == "seed") {
            plan.omnibus.seed = ov.get<std::uint64_t>();
          } else if (ok == "transform") {
            plan.omnibus.transform = omnibus_transform_from_string(ov.get<std::string>());
          } else if (ok == "cache_dir") {
            plan.omnibus.cache_dir = resolve_path(ov.get<std::string>(), base_dir);
          } else {
            throw ConfigError("plan: unknown omnibus key '" + ok + "'");
          }
        }
      } else if (key == "reference") {
        plan.reference = v.is_string() ? load_reference_config(resolve_path(v.get<std::string>(), base_dir))
                                       : reference_config_from_json(v.dump());
      } else if (key == "irt_population") {
        for (const auto& [pk, pv] : v.items()) {
          const double x = pv.get<double>();
          if (pk == "intercept_mean") {
            plan.irt_population.intercept_mean = x;
          } else if (pk == "intercept_sd") {
            plan.irt_population.intercept_sd = x;
          } else if (pk == "slope_mean") {
            plan.irt_population.slope_mean = x;
          } else if (pk == "slope_sd") {
            plan.irt_population.slope_sd = x;
          } else if (pk == "horizon_years") {
            plan.irt_population.horizon_years = x;
          } else {
            throw ConfigError("plan: unknown irt_population key '" + pk + "'");
          }
        }
      } else if (key == "comment") {
      } else {
        throw ConfigError("plan: unknown key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("plan: ") + e.what());
  }
  if (!profile.empty()) apply_profile(plan, profile);
  plan.validate();
  return plan;
}

StudyPlan load_plan(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open plan file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return plan_from_json(buf.str(), fs::path(path).parent_path().string());
}

std::string plan_to_json(const StudyPlan& plan) {
  json doc;
  doc["name"] = plan.name;
  doc["generator"] = to_string(plan.generator);
  json sc = json::array();
  for (const auto& s : plan.scenarios) sc.push_back(scenario_to_json(s));
  doc["scenarios"] = sc;
  doc["schemes"] = plan.schemes;
  json ms = json::array();
  for (auto m : plan.methods) ms.push_back(std::string(method_name(m)));
  doc["methods"] = ms;
  doc["n_per_group"] = plan.n_per_group;
  doc["n_reps"] = plan.n_reps;
  doc["alpha"] = plan.alpha;
  doc["master_seed"] = plan.master_seed;
  doc["maxt_tol"] = plan.maxt_tol;
  doc["quadrature_nodes"] = plan.quadrature_nodes;
  doc["bootstrap_replace"] = plan.bootstrap_replace;
  doc["omnibus"] = {{"reps", plan.omnibus.reps},
                    {"seed", plan.omnibus.seed},
                    {"transform", to_string(plan.omnibus.transform)},
                    {"cache_dir", plan.omnibus.cache_dir}};
  doc["reference"] = json::parse(reference_config_to_json(plan.reference));
  doc["irt_population"] = {{"intercept_mean", plan.irt_population.intercept_mean},
                           {"intercept_sd", plan.irt_population.intercept_sd},
                           {"slope_mean", plan.irt_population.slope_mean},
                           {"slope_sd", plan.irt_population.slope_sd},
                           {"horizon_years", plan.irt_population.horizon_years}};
  return doc.dump(2);
}

void apply_profile(StudyPlan& plan, const std::string& profile) {
  if (profile == "full") return;
  if (profile == "desk") {
    plan.n_reps = 2000;
    return;
  }
  throw InputError("unknown profile '" + profile + "' (expected full or desk)");
}

const SchemeAuxiliaries& StudyContext::scheme(const std::string& name) const {
  for (const auto& s : schemes) {
    if (s.scheme.name == name) return s;
  }
  throw InputError("scheme '" + name + "' was not prepared");
}

namespace {

bool wants(const StudyPlan& plan, Method m) {
  return std::find(plan.methods.begin(), plan.methods.end(), m) != plan.methods.end();
}

struct FittedScheme {
  GrModel model;
  LinearLatentApprox approx;
};

FittedScheme fit_scheme_models(const ItemDataset& pool, const ScoringScheme& scheme, const GrFitOptions& opts,
                               int nodes) {
  const ItemDataset rescored = apply_rescoring(pool, scheme);
  const ResponseRows rows = pool_visits(rescored);
  FittedScheme out;
  out.model = fit_grm(rows, scheme, opts).model;
  const EapScorer scorer(out.model, nodes);
  const auto thetas = scorer.eap(rows.rows);
  out.approx = fit_linear_latent_approx(rows.rows, thetas, scheme.name);
  return out;
}

}  // namespace

StudyContext prepare_study(const StudyPlan& plan, const PrepareOptions& options) {
  plan.validate();
  StudyContext ctx;
  ctx.reference = plan.reference;
  ctx.pool = build_synthetic_reference(plan.reference);
  ctx.mvn_params = estimate_mvn_params(ctx.pool);
  ctx.mvn_spec = std::make_shared<const MvnSpec>(ctx.mvn_params.spec());

  const bool need_irt = options.force_irt || wants(plan, Method::kIrt) || wants(plan, Method::kLmApprox);
  GrFitOptions grm = options.grm;
  grm.quadrature_nodes = plan.quadrature_nodes;
  for (const auto& name : plan.schemes) {
    SchemeAuxiliaries aux;
    aux.scheme = resolve_scheme(name);
    aux.scheme.validate();
    if (std::any_of(ctx.schemes.begin(), ctx.schemes.end(),
                    [&](const SchemeAuxiliaries& s) { return s.scheme.name == aux.scheme.name; })) {
      throw ConfigError("plan lists scheme '" + aux.scheme.name + "' twice");
    }
    if (need_irt) {
      auto fitted = fit_scheme_models(ctx.pool, aux.scheme, grm, plan.quadrature_nodes);
      if (aux.scheme.name == "original") ctx.generating_model = std::make_shared<const GrModel>(fitted.model);
      aux.scorer = std::make_shared<const EapScorer>(std::move(fitted.model), plan.quadrature_nodes);
      aux.approx = std::move(fitted.approx);
    }
    ctx.schemes.push_back(std::move(aux));
  }
  if (plan.generator == GeneratorKind::kIrt && !ctx.generating_model) {
    const auto fitted = fit_scheme_models(ctx.pool, ScoringScheme::original(), grm, plan.quadrature_nodes);
    ctx.generating_model = std::make_shared<const GrModel>(fitted.model);
  }
  if (wants(plan, Method::kOmnibus)) {
    ctx.omnibus_items = std::make_shared<const OmnibusCalibration>(cached_calibration(
        plan.omnibus.cache_dir, kItemCount, plan.omnibus.reps, plan.omnibus.seed, plan.omnibus.transform));
  }
  if (wants(plan, Method::kOmnibusDomains)) {
    ctx.omnibus_domains = std::make_shared<const OmnibusCalibration>(cached_calibration(
        plan.omnibus.cache_dir, kDomainCount, plan.omnibus.reps, plan.omnibus.seed, plan.omnibus.transform));
  }
  return ctx;
}

double mc_se(double rate, std::size_t n_reps) {
  if (n_reps == 0) return 0.0;
  return std::sqrt(rate * (1.0 - rate) / static_cast<double>(n_reps));
}

namespace {

// Compares digit runs numerically so that d2 sorts before d10.
bool natural_less(const std::string& a, const std::string& b) {
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const bool da = std::isdigit(static_cast<unsigned char>(a[i])) != 0;
    const bool db = std::isdigit(static_cast<unsigned char>(b[j])) != 0;
    if (da && db) {
      std::size_t ie = i, je = j;
      while (ie < a.size() && std::isdigit(static_cast<unsigned char>(a[ie]))) ++ie;
      while (je < b.size() && std::isdigit(static_cast<unsigned char>(b[je]))) ++je;
      const std::string na = a.substr(i, ie - i), nb = b.substr(j, je - j);
      const auto strip = [](const std::string& s) {
        const auto p = s.find_first_not_of('0');
        return p == std::string::npos ? std::string("0") : s.substr(p);
      };
      const std::string sa = strip(na), sb = strip(nb);
      if (sa.size() != sb.size()) return sa.size() < sb.size();
      if (sa != sb) return sa < sb;
      if (na.size() != nb.size()) return na.size() < nb.size();
      i = ie;
      j = je;
    } else {
      if (a[i] != b[j]) return a[i] < b[j];
      ++i;
      ++j;
    }
  }
  return a.size() - i < b.size() - j;
}

}  // namespace

void sort_power_table(PowerTable& table) {
  std::stable_sort(table.begin(), table.end(), [](const PowerRow& x, const PowerRow& y) {
    const std::string* fx[] = {&x.generator, &x.scenario, &x.scheme, &x.method};
    const std::string* fy[] = {&y.generator, &y.scenario, &y.scheme, &y.method};
    for (int f = 0; f < 4; ++f) {
      if (*fx[f] != *fy[f]) return natural_less(*fx[f], *fy[f]);
    }
    return false;
  });
}

unsigned resolve_thread_count(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("PSPRS_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0 && v <= 1024) return static_cast<unsigned>(v);
    throw InputError(std::string("PSPRS_THREADS must be a positive integer, got '") + env + "'");
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

std::uint64_t scenario_key(const EffectScenario& scenario) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : scenario.label) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t derive_replicate_seed(std::uint64_t master, std::uint64_t scenario_id, std::uint64_t rep) {
  const std::uint64_t base = mix64(master) ^ mix64(scenario_id + 0x632be59bd9b4e019ULL);
  return mix64(base + rep * 0x9e3779b97f4a7c15ULL);
}

namespace {

enum Outcome : unsigned char { kAccept = 0, kReject = 1, kFailed = 2 };

struct ReplicateFailure {
  std::size_t rep;
  std::size_t cell;
  std::string message;
};

}  // namespace

StudyResult run_scenario(const StudyPlan& plan, const StudyContext& ctx, const EffectScenario& scenario,
                         const RunOptions& options) {
  plan.validate();
  std::vector<const SchemeAuxiliaries*> schemes;
  for (const auto& name : plan.schemes) {
    const ScoringScheme resolved = resolve_scheme(name);
    schemes.push_back(&ctx.scheme(resolved.name));
  }
  const std::size_t n_methods = plan.methods.size();
  const std::size_t cells = schemes.size() * n_methods;
  std::vector<TestAuxiliaries> aux(schemes.size());
  for (std::size_t s = 0; s < schemes.size(); ++s) {
    aux[s].scorer = schemes[s]->scorer.get();
    aux[s].approx = schemes[s]->approx ? &*schemes[s]->approx : nullptr;
    aux[s].omnibus_items = ctx.omnibus_items.get();
    aux[s].omnibus_domains = ctx.omnibus_domains.get();
    aux[s].maxt.tol = plan.maxt_tol;
  }
  if (plan.generator == GeneratorKind::kIrt && !ctx.generating_model) {
    throw InputError("context has no generating IRT model");
  }

  const std::size_t reps = plan.n_reps;
  const std::uint64_t key = scenario_key(scenario);
  std::vector<unsigned char> outcome(reps * cells, kAccept);
  std::vector<ReplicateFailure> failures;
  std::mutex failure_mutex;
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};

  auto generate = [&](RngStream& rng) {
    switch (plan.generator) {
      case GeneratorKind::kMvn:
        return gen_discretized_mvn(*ctx.mvn_spec, scenario, plan.n_per_group, rng);
      case GeneratorKind::kBootstrap:
        return gen_bootstrap(ctx.pool, scenario, plan.n_per_group, rng, plan.bootstrap_replace);
      case GeneratorKind::kIrt:
        break;
    }
    return gen_irt_longitudinal(plan.irt_population, *ctx.generating_model, scenario.rho, plan.n_per_group, rng);
  };

  auto worker = [&]() {
    std::vector<ReplicateFailure> local;
    for (std::size_t rep = next.fetch_add(1); rep < reps; rep = next.fetch_add(1)) {
      RngStream rng(derive_replicate_seed(plan.master_seed, key, rep));
      unsigned char* row = &outcome[rep * cells];
      try {
        const ItemDataset data = generate(rng);
        for (std::size_t s = 0; s < schemes.size(); ++s) {
          RngStream test_rng = rng.split();
          const ItemDataset scored =
              schemes[s]->scheme.is_identity() ? data : apply_rescoring(data, schemes[s]->scheme);
          const auto runs = run_methods(scored, plan.methods, aux[s], test_rng);
          for (std::size_t m = 0; m < n_methods; ++m) {
            const std::size_t cell = s * n_methods + m;
            if (runs[m].outcome) {
              row[cell] = runs[m].outcome->p_one_sided <= plan.alpha ? kReject : kAccept;
            } else {
              row[cell] = kFailed;
              local.push_back({rep, cell, runs[m].error});
            }
          }
        }
      } catch (const std::exception& e) {
        for (std::size_t c = 0; c < cells; ++c) {
          row[c] = kFailed;
          local.push_back({rep, c, std::string("generation: ") + e.what()});
        }
      }
      const std::size_t d = done.fetch_add(1) + 1;
      if (options.progress && d % 100 == 0) options.progress(d, reps);
    }
    std::lock_guard<std::mutex> lock(failure_mutex);
    failures.insert(failures.end(), std::make_move_iterator(local.begin()), std::make_move_iterator(local.end()));
  };

  const unsigned threads = std::min<unsigned>(resolve_thread_count(options.threads), static_cast<unsigned>(reps));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (options.progress) options.progress(reps, reps);

  StudyResult result;
  for (std::size_t s = 0; s < schemes.size(); ++s) {
    for (std::size_t m = 0; m < n_methods; ++m) {
      const std::size_t cell = s * n_methods + m;
      PowerRow row;
      row.generator = to_string(plan.generator);
      row.scenario = scenario.label;
      row.scheme = schemes[s]->scheme.name;
      row.method = std::string(method_name(plan.methods[m]));
      row.n_reps = reps;
      for (std::size_t rep = 0; rep < reps; ++rep) {
        const unsigned char o = outcome[rep * cells + cell];
        row.rejections += o == kReject;
        row.failures += o == kFailed;
      }
      row.rejection_rate = static_cast<double>(row.rejections) / static_cast<double>(reps);
      row.mc_se = mc_se(row.rejection_rate, reps);
      result.table.push_back(std::move(row));
    }
  }
  std::sort(failures.begin(), failures.end(),
            [](const ReplicateFailure& a, const ReplicateFailure& b) { return std::tie(a.rep, a.cell) < std::tie(b.rep, b.cell); });
  for (auto& f : failures) {
    const std::size_t s = f.cell / n_methods, m = f.cell % n_methods;
    result.failures.push_back({scenario.label, schemes[s]->scheme.name, std::string(method_name(plan.methods[m])), f.rep,
                               std::move(f.message)});
  }
  sort_power_table(result.table);
  return result;
}

void check_failure_rate(const PowerTable& table) {
  const PowerRow* worst = nullptr;
  double worst_rate = 0.0;
  for (const auto& row : table) {
    const double rate = row.n_reps == 0 ? 0.0 : static_cast<double>(row.failures) / static_cast<double>(row.n_reps);
    if (rate > 0.01 && rate > worst_rate) {
      worst = &row;
      worst_rate = rate;
    }
  }
  if (worst != nullptr) {
    std::ostringstream msg;
    msg << "replicate failure rate " << worst_rate << " exceeds 1% for " << worst->generator << '/' << worst->scenario
        << '/' << worst->scheme << '/' << worst->method;
    throw NumericalError(msg.str());
  }
}

StudyResult run_plan(const StudyPlan& plan, const StudyContext& context, const RunOptions& options) {
  StudyResult all;
  for (const auto& scenario : plan.scenarios) {
    auto r = run_scenario(plan, context, scenario, options);
    all.table.insert(all.table.end(), r.table.begin(), r.table.end());
    all.failures.insert(all.failures.end(), r.failures.begin(), r.failures.end());
  }
  sort_power_table(all.table);
  if (options.enforce_failure_limit) check_failure_rate(all.table);
  return all;
}

}  // namespace psprs
