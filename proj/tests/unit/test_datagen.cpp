#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <set>

#include "psprs/error.hpp"
#include "psprs/generators.hpp"
#include "psprs/procedures.hpp"
#include "psprs/reference.hpp"
#include "psprs/scoring.hpp"
#include "support.hpp"

using namespace psprs;

namespace {

ScoringScheme with_map(std::size_t item, std::array<int, kOriginalCategories> map) {
  ScoringScheme s = ScoringScheme::original();
  s.name = "custom";
  s.maps[item] = map;
  return s;
}

int total(const ItemScores& s) { return std::accumulate(s.begin(), s.end(), 0); }

}  // namespace

TEST_SUITE("scoring schemes") {
  TEST_CASE("collapse map example") {
    ItemDataset d;
    ItemScores b{}, w{};
    for (std::size_t k = 0; k < kItemCount; ++k) b[k] = w[k] = static_cast<int>(k % 5);
    for (int v = 0; v <= 4; ++v) {
      b[2] = v;
      d.push_back("S" + std::to_string(v), v % 2 ? Arm::kTreatment : Arm::kControl, b, w);
    }
    const ItemDataset r = apply_rescoring(d, with_map(2, {0, 0, 1, 1, 2}));
    const std::vector<int> expect = {0, 0, 1, 1, 2};
    for (int v = 0; v <= 4; ++v) {
      CHECK(r.baseline[static_cast<std::size_t>(v)][2] == expect[static_cast<std::size_t>(v)]);
      CHECK(r.baseline[static_cast<std::size_t>(v)][3] == 3);  // other items keep the identity map
    }
    CHECK(r.scheme == "custom");
  }

  TEST_CASE("identity scheme leaves the dataset unchanged") {
    RngStream rng(1);
    const ItemDataset d = psprs::testing::random_item_dataset(30, rng);
    const ItemDataset r = apply_rescoring(d, ScoringScheme::original());
    CHECK(r.baseline == d.baseline);
    CHECK(r.week52 == d.week52);
    CHECK(r.ids == d.ids);
    CHECK(ScoringScheme::original().is_identity());
    CHECK_FALSE(ScoringScheme::fda_default().is_identity());
  }

  TEST_CASE("collapsing never increases the sum score") {
    RngStream rng(2);
    const ScoringScheme fda = ScoringScheme::fda_default();
    for (int trial = 0; trial < 50; ++trial) {
      const ItemDataset d = psprs::testing::random_item_dataset(20, rng);
      const ItemDataset r = apply_rescoring(d, fda);
      for (std::size_t i = 0; i < d.size(); ++i) {
        CHECK(total(r.baseline[i]) <= total(d.baseline[i]));
        CHECK(total(r.week52[i]) <= total(d.week52[i]));
      }
      r.validate(fda);
    }
  }

  TEST_CASE("rescoring twice is rejected") {
    RngStream rng(3);
    const ItemDataset r = apply_rescoring(psprs::testing::random_item_dataset(5, rng), ScoringScheme::fda_default());
    CHECK_THROWS_AS(apply_rescoring(r, ScoringScheme::fda_default()), InputError);
  }

  TEST_CASE("invalid maps are configuration errors") {
    CHECK_THROWS_AS(with_map(0, {0, 2, 2, 3, 4}).validate(), ConfigError);  // skips 1
    CHECK_THROWS_AS(with_map(0, {0, 1, 0, 1, 2}).validate(), ConfigError);  // not monotone
    CHECK_THROWS_AS(with_map(0, {1, 1, 2, 3, 4}).validate(), ConfigError);  // does not start at 0
    CHECK_NOTHROW(with_map(0, {0, 0, 0, 0, 0}).validate());
    ScoringScheme::fda_default().validate();
  }

  TEST_CASE("scheme files") {
    namespace fs = std::filesystem;
    const fs::path file = fs::temp_directory_path() / "psprs_scheme_test.json";
    const ScoringScheme fda = ScoringScheme::fda_default();
    save_scheme(fda, file.string());
    const ScoringScheme back = load_scheme(file.string());
    CHECK(back.name == fda.name);
    CHECK(back.maps == fda.maps);
    fs::remove(file);

    const ScoringScheme shipped = load_scheme(psprs::testing::source_path("config/fda_collapse.json"));
    CHECK(shipped.maps == fda.maps);
    CHECK(resolve_scheme("fda").maps == fda.maps);
    CHECK(resolve_scheme("original").is_identity());
    CHECK_THROWS_AS(resolve_scheme("no/such/scheme.json"), IoError);
    CHECK(ScoringScheme::fda_default().categories(6) == 3);
  }
}

TEST_SUITE("scenarios") {
  TEST_CASE("built-in scenarios") {
    const auto d1 = EffectScenario::builtin("d1");
    for (double v : d1.d) CHECK(v == 0.20);
    CHECK(EffectScenario::builtin("null").is_null());
    CHECK(EffectScenario::builtin("d10").d[0] == 2.5);
    CHECK(EffectScenario::builtin("rho=0.55").rho == 0.55);
    CHECK(EffectScenario::builtin("rho=1").is_null());
    CHECK(builtin_shift_labels().size() == 12);
    const std::vector<double> grid = {0.45, 0.50, 0.55, 0.60, 0.65, 0.70, 0.75};
    const auto g = default_rho_grid();
    REQUIRE(g.size() == grid.size());
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(g[i] == doctest::Approx(grid[i]).epsilon(1e-15));
    CHECK_THROWS_AS(EffectScenario::builtin("d13"), InputError);
    CHECK_THROWS_AS(EffectScenario::builtin("rho=abc"), InputError);
  }

  TEST_CASE("validation") {
    std::array<double, kItemCount> neg{};
    neg[3] = -0.1;
    CHECK_THROWS_AS(EffectScenario::item_shift("bad", neg).validate(), InputError);
    CHECK_THROWS_AS(EffectScenario::slope_ratio(0.0).validate(), InputError);
    EffectScenario frozen;
    frozen.kind = EffectScenario::Kind::kSlopeRatio;
    frozen.rho = 0.0;
    CHECK_THROWS_AS(frozen.validate(), InputError);
    CHECK_NOTHROW(frozen.validate(true));
    CHECK_THROWS_AS(EffectScenario::slope_ratio(1.2).validate(), InputError);
  }
}

TEST_SUITE("discretized MVN generator") {
  TEST_CASE("rounding and trimming") {
    CHECK(discretize_score(3.6) == 4);
    CHECK(discretize_score(4.7) == 4);
    CHECK(discretize_score(-0.3) == 0);
    CHECK(discretize_score(2.5) == 3);
    CHECK(discretize_score(1.49) == 1);
    CHECK(discretize_score(-7.0) == 0);
  }

  TEST_CASE("shift applies to week-52 coordinates of the treated arm only") {
    DiscretizedMvnParams p;
    p.mean20 = Vector::Constant(20, 2.0);
    p.cov20 = Matrix::Zero(20, 20);
    std::array<double, kItemCount> d{};
    d[0] = 0.6;
    d[9] = 0.4;
    RngStream rng(4);
    const ItemDataset g = gen_discretized_mvn(p, EffectScenario::item_shift("x", d), 5, rng);
    REQUIRE(g.size() == 10);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const bool treated = g.arm[i] == Arm::kTreatment;
      CHECK(treated == (i >= 5));
      for (std::size_t k = 0; k < kItemCount; ++k) CHECK(g.baseline[i][k] == 2);
      CHECK(g.week52[i][0] == (treated ? 1 : 2));
      CHECK(g.week52[i][9] == 2);  // 1.6 rounds back up
      CHECK(g.week52[i][4] == 2);
    }
  }

  TEST_CASE("scores stay in range") {
    const auto& ctx = psprs::testing::shared_context();
    RngStream rng(5);
    for (const char* label : {"null", "d4", "d10"}) {
      const ItemDataset g = gen_discretized_mvn(*ctx.mvn_spec, EffectScenario::builtin(label), 70, rng);
      CHECK(g.size() == 140);
      g.validate(ScoringScheme::original());
    }
    CHECK_THROWS_AS(gen_discretized_mvn(*ctx.mvn_spec, EffectScenario::builtin("null"), 1, rng), InputError);
  }

  TEST_CASE("null scenario gives uniform sum-score p-values") {
    const auto& ctx = psprs::testing::shared_context();
    RngStream rng(6);
    std::vector<double> p;
    for (int rep = 0; rep < 2000; ++rep) {
      const ItemDataset g = gen_discretized_mvn(*ctx.mvn_spec, EffectScenario::builtin("null"), 70, rng);
      p.push_back(test_sum_score(g).p_one_sided);
    }
    const double ks = psprs::testing::ks_uniform_distance(p);
    MESSAGE("KS distance " << ks);
    CHECK(ks < psprs::testing::ks_critical_001(p.size()));
  }
}

TEST_SUITE("bootstrap generator") {
  TEST_CASE("injection example") {
    std::vector<int> scores = {2, 3, 0, 4};
    std::vector<int> pre;
    const std::vector<std::size_t> selected = {3};
    inject_item_effect(scores, 1.25, selected, &pre);
    CHECK(pre == std::vector<int>{1, 2, -1, 2});
    CHECK(scores == std::vector<int>{1, 2, 0, 2});
    CHECK(extra_unit_count(1.25, 4) == 1);
  }

  TEST_CASE("extra unit counts") {
    CHECK(extra_unit_count(0.0, 70) == 0);
    CHECK(extra_unit_count(0.5, 70) == 35);
    CHECK(extra_unit_count(0.2, 70) == 14);
    CHECK(extra_unit_count(0.85, 70) == 60);  // 59.5 rounds up
    CHECK(extra_unit_count(2.5, 70) == 35);
  }

  TEST_CASE("zero shift leaves scores unchanged") {
    std::vector<int> scores = {2, 3, 0, 4};
    inject_item_effect(scores, 0.0, {});
    CHECK(scores == std::vector<int>{2, 3, 0, 4});
  }

  TEST_CASE("bookkeeping identity holds in every replicate") {
    const auto& ctx = psprs::testing::shared_context();
    RngStream rng(7);
    const std::size_t n = 70;
    for (const auto& label : builtin_shift_labels()) {
      const EffectScenario sc = EffectScenario::builtin(label);
      for (int rep = 0; rep < 25; ++rep) {
        BootstrapTrace trace;
        const ItemDataset g = gen_bootstrap(ctx.pool, sc, n, rng, false, &trace);
        REQUIRE(trace.pool_indices.size() == 2 * n);
        for (std::size_t k = 0; k < kItemCount; ++k) {
          const double d = sc.d[k];
          CHECK(trace.selected[k].size() == extra_unit_count(d, n));
          long shift = 0;
          for (std::size_t i = 0; i < n; ++i) {
            shift += trace.original[k][i] - trace.pre_clamp[k][i];
            CHECK(g.week52[n + i][k] == std::max(0, trace.pre_clamp[k][i]));
            CHECK(trace.original[k][i] == ctx.pool.week52[trace.pool_indices[n + i]][k]);
          }
          const long expected = static_cast<long>(std::floor(d)) * static_cast<long>(n) +
                                static_cast<long>(extra_unit_count(d, n));
          CHECK(shift == expected);
        }
        // Controls and baselines are copied unchanged.
        for (std::size_t i = 0; i < 2 * n; ++i) {
          CHECK(g.baseline[i] == ctx.pool.baseline[trace.pool_indices[i]]);
          if (i < n) CHECK(g.week52[i] == ctx.pool.week52[trace.pool_indices[i]]);
        }
      }
    }
  }

  TEST_CASE("no subject is drawn twice without replacement") {
    const auto& ctx = psprs::testing::shared_context();
    RngStream rng(8);
    for (int rep = 0; rep < 200; ++rep) {
      const ItemDataset g = gen_bootstrap(ctx.pool, EffectScenario::builtin("d2"), 70, rng);
      const std::set<std::string> ids(g.ids.begin(), g.ids.end());
      CHECK(ids.size() == g.size());
    }
    const std::size_t half = ctx.pool.size() / 2 + 1;
    CHECK_THROWS_AS(gen_bootstrap(ctx.pool, EffectScenario::builtin("null"), half, rng), InputError);
    CHECK_NOTHROW(gen_bootstrap(ctx.pool, EffectScenario::builtin("null"), half, rng, true));
  }

  TEST_CASE("rescored pools are rejected") {
    const auto& ctx = psprs::testing::shared_context();
    RngStream rng(9);
    const ItemDataset rescored = apply_rescoring(ctx.pool, ScoringScheme::fda_default());
    CHECK_THROWS_AS(gen_bootstrap(rescored, EffectScenario::builtin("null"), 10, rng), InputError);
  }
}

TEST_SUITE("IRT longitudinal generator") {
  TEST_CASE("zero slope ratio freezes the treated latent value") {
    const auto& ctx = psprs::testing::shared_context();
    RngStream rng(10);
    std::vector<LatentPath> latent;
    const ItemDataset g = gen_irt_longitudinal(IrtPopulationParams{}, *ctx.generating_model, 0.0, 50, rng, &latent);
    REQUIRE(latent.size() == 100);
    for (std::size_t i = 0; i < 100; ++i) {
      if (g.arm[i] == Arm::kTreatment) {
        CHECK(latent[i].week52 == latent[i].baseline);
      } else {
        CHECK(latent[i].week52 >= latent[i].baseline);
      }
    }
    g.validate(ScoringScheme::original());
  }

  TEST_CASE("treated progression scales with the slope ratio") {
    const auto& ctx = psprs::testing::shared_context();
    RngStream a(11), b(11);
    std::vector<LatentPath> la, lb;
    (void)gen_irt_longitudinal(IrtPopulationParams{}, *ctx.generating_model, 1.0, 40, a, &la);
    (void)gen_irt_longitudinal(IrtPopulationParams{}, *ctx.generating_model, 0.5, 40, b, &lb);
    // The latent draws precede the item draws of each subject, so the first
    // subject of both runs shares psi(0) and s.
    CHECK(la[0].baseline == lb[0].baseline);
    CHECK(la[0].week52 == lb[0].week52);  // control
  }

  TEST_CASE("progression moves scores upward") {
    const auto& ctx = psprs::testing::shared_context();
    RngStream rng(12);
    const ItemDataset g = gen_irt_longitudinal(IrtPopulationParams{}, *ctx.generating_model, 1.0, 500, rng);
    double base = 0, w52 = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      base += total(g.baseline[i]);
      w52 += total(g.week52[i]);
    }
    CHECK(w52 > base);
  }

  TEST_CASE("invalid inputs") {
    const auto& ctx = psprs::testing::shared_context();
    RngStream rng(13);
    CHECK_THROWS_AS(gen_irt_longitudinal(IrtPopulationParams{}, *ctx.generating_model, 1.5, 10, rng), InputError);
    IrtPopulationParams bad;
    bad.slope_mean = -0.1;
    CHECK_THROWS(gen_irt_longitudinal(bad, *ctx.generating_model, 0.5, 10, rng));
    CHECK_THROWS_AS(gen_irt_longitudinal(IrtPopulationParams{}, ctx.scheme("fda-collapse").scorer->model(), 0.5, 10, rng),
                    InputError);
  }
}

TEST_SUITE("synthetic reference") {
  TEST_CASE("fixed seed gives an identical pool") {
    const ReferenceConfig cfg;
    const ItemDataset a = build_synthetic_reference(cfg);
    const ItemDataset b = build_synthetic_reference(cfg);
    CHECK(a.baseline == b.baseline);
    CHECK(a.week52 == b.week52);
    CHECK(a.ids == b.ids);
    CHECK(a.size() == cfg.n_subjects);
    a.validate(ScoringScheme::original());
  }

  TEST_CASE("baseline means are near their targets") {
    const ReferenceConfig cfg;
    const ItemDataset a = build_synthetic_reference(cfg);
    for (std::size_t k = 0; k < kItemCount; ++k) {
      const auto col = item_column(a.baseline, k);
      const double mean = std::accumulate(col.begin(), col.end(), 0.0) / static_cast<double>(col.size());
      CHECK(std::fabs(mean - cfg.baseline_mean[k]) <= 0.15);
    }
  }

  TEST_CASE("discretization calibration hits its targets") {
    for (auto [m, s] : {std::pair{0.636, 0.62}, std::pair{2.228, 1.07}, std::pair{2.886, 1.28}}) {
      const DiscreteCalibration c = calibrate_discretization(m, s);
      const auto [mean, sd] = discretized_moments(c.mu, c.sigma);
      CHECK(mean == doctest::Approx(m).epsilon(1e-6));
      CHECK(sd == doctest::Approx(s).epsilon(1e-6));
    }
    CHECK_THROWS_AS(calibrate_discretization(3.9, 1.5), ConfigError);
  }

  TEST_CASE("config validation and JSON round-trip") {
    ReferenceConfig cfg;
    cfg.loading = 1.5;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    const ReferenceConfig def;
    const ReferenceConfig back = reference_config_from_json(reference_config_to_json(def));
    CHECK(back.seed == def.seed);
    CHECK(back.baseline_mean == def.baseline_mean);
    CHECK(back.week52_sd == def.week52_sd);
    const ReferenceConfig shipped = load_reference_config(psprs::testing::source_path("config/reference.json"));
    CHECK(shipped.baseline_mean == def.baseline_mean);
    CHECK(shipped.seed == def.seed);
  }

  TEST_CASE("estimated MVN parameters") {
    const ItemDataset a = build_synthetic_reference(ReferenceConfig{});
    const DiscretizedMvnParams p = estimate_mvn_params(a);
    const auto col = item_column(a.week52, 4);
    CHECK(p.mean20(14) == doctest::Approx(std::accumulate(col.begin(), col.end(), 0.0) / static_cast<double>(col.size())));
    CHECK((p.cov20 - p.cov20.transpose()).norm() == 0.0);
    CHECK_NOTHROW(p.spec());
  }
}
