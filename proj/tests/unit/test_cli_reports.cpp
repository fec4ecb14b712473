#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "psprs/error.hpp"
#include "psprs/reanalysis.hpp"
#include "psprs/reference.hpp"
#include "psprs/report.hpp"
#include "psprs/trial_csv.hpp"
#include "support.hpp"

using namespace psprs;

namespace {

std::string header() {
  std::string h;
  for (auto c : kTrialColumns) h += (h.empty() ? "" : ",") + std::string(c);
  return h + "\n";
}

std::string row(const std::string& id, const std::string& arm, const std::string& visit, const std::string& items) {
  return id + "," + arm + "," + visit + "," + items + "\n";
}

template <std::size_t N>
std::string joined(const std::array<std::string_view, N>& cols) {
  std::string s;
  for (auto c : cols) s += (s.empty() ? "" : ",") + std::string(c);
  return s;
}

std::string first_line(const std::string& text) { return text.substr(0, text.find('\n')); }

// Reference pool split into three labelled arms.
TrialData three_arm_trial() {
  const ItemDataset pool = build_synthetic_reference(ReferenceConfig{});
  TrialData t;
  const char* labels[] = {"high", "low", "placebo"};
  for (std::size_t i = 0; i < pool.size(); ++i) {
    TrialSubject s;
    s.id = pool.ids[i];
    s.arm = labels[i % 3];
    MaybeScores b{}, w{};
    for (std::size_t k = 0; k < kItemCount; ++k) {
      b[k] = pool.baseline[i][k];
      w[k] = pool.week52[i][k];
    }
    s.baseline = b;
    s.week52 = w;
    t.subjects.push_back(s);
  }
  t.arms = {"high", "low", "placebo"};
  return t;
}

}  // namespace

TEST_SUITE("trial CSV") {
  TEST_CASE("incomplete subjects are excluded with a reason") {
    const TrialData t = read_trial_csv(psprs::testing::source_path("tests/fixtures/small_trial.csv"));
    CompleteCaseLog log;
    const ItemDataset d = select_comparison(t, "drug", "placebo", &log);
    CHECK(d.size() + log.exclusions.size() == t.subjects.size());
    bool r2 = false, r6 = false;
    for (const auto& e : log.exclusions) {
      r2 = r2 || e == "subject R2 (drug): week52 item12 missing";
      r6 = r6 || e == "subject R6 (drug): baseline item03 missing";
    }
    CHECK(r2);
    CHECK(r6);
    CHECK(std::find(d.ids.begin(), d.ids.end(), "R2") == d.ids.end());
    CHECK(log.retained["drug"] + log.retained["placebo"] == d.size());
    CHECK(log.excluded["drug"] >= 2);
  }

  TEST_CASE("pairwise subset sizes") {
    std::string text = header();
    const std::string full = "1,2,1,0,1,2,3,1,2,1";
    for (int i = 0; i < 71; ++i) {
      const std::string id = "A" + std::to_string(i);
      text += row(id, "drug", "baseline", full);
      text += row(id, "drug", "week52", i < 66 ? full : "1,2,1,0,1,2,3,1,,1");
    }
    for (int i = 0; i < 67; ++i) {
      const std::string id = "P" + std::to_string(i);
      if (i < 64) text += row(id, "placebo", "baseline", full);
      text += row(id, "placebo", "week52", full);
    }
    CompleteCaseLog log;
    const ItemDataset d = select_comparison(parse_trial_csv(text), "drug", "placebo", &log);
    CHECK(d.count(Arm::kTreatment) == 66);
    CHECK(d.count(Arm::kControl) == 64);
    CHECK(log.excluded["drug"] == 5);
    CHECK(log.excluded["placebo"] == 3);
    CHECK(log.exclusions.back() == "subject P66 (placebo): no baseline row");
  }

  TEST_CASE("emit then reload is lossless") {
    const std::string path = psprs::testing::source_path("tests/fixtures/small_trial.csv");
    const TrialData t = read_trial_csv(path);
    const TrialData back = parse_trial_csv(format_trial_csv(t));
    REQUIRE(back.subjects.size() == t.subjects.size());
    CHECK(back.arms == t.arms);
    for (std::size_t i = 0; i < t.subjects.size(); ++i) {
      CHECK(back.subjects[i].id == t.subjects[i].id);
      CHECK(back.subjects[i].arm == t.subjects[i].arm);
      CHECK(back.subjects[i].baseline == t.subjects[i].baseline);
      CHECK(back.subjects[i].week52 == t.subjects[i].week52);
    }
    RngStream rng(1);
    const ItemDataset d = psprs::testing::random_item_dataset(30, rng);
    const ItemDataset d2 = select_comparison(parse_trial_csv(format_trial_csv(d, "T", "C")), "T", "C");
    CHECK(d2.ids == d.ids);
    CHECK(d2.arm == d.arm);
    CHECK(d2.baseline == d.baseline);
    CHECK(d2.week52 == d.week52);
  }

  TEST_CASE("columns may come in any order") {
    const std::string text =
        "arm,visit,item28,item27,item26,item25,item24,item13,item12,item05,item04,item03,subject_id\n"
        "x,baseline,0,1,2,3,4,0,1,2,3,4,s1\n";
    const TrialData t = parse_trial_csv(text);
    REQUIRE(t.subjects.size() == 1);
    CHECK((*t.subjects[0].baseline)[0] == 4);
    CHECK((*t.subjects[0].baseline)[9] == 0);
    CHECK_FALSE(t.subjects[0].week52);
  }

  TEST_CASE("unknown arm lists the available labels") {
    const TrialData t = read_trial_csv(psprs::testing::source_path("tests/fixtures/small_trial.csv"));
    try {
      (void)select_comparison(t, "Nope", "placebo");
      FAIL("expected InputError");
    } catch (const InputError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("Nope") != std::string::npos);
      CHECK(msg.find("placebo, drug") != std::string::npos);
    }
    try {
      (void)parse_trial_csv(header() + row("s", "drug", "baseline", "0,0,0,0,0,0,0,0,0,0"), {"a", "b"}, "f.csv");
      FAIL("expected InputError");
    } catch (const InputError& e) {
      CHECK(std::string(e.what()) == "f.csv:2: unknown arm label 'drug'; allowed: a, b");
    }
  }

  TEST_CASE("malformed rows name the line") {
    const auto message = [](const std::string& text) {
      try {
        (void)parse_trial_csv(text, {}, "t.csv");
      } catch (const InputError& e) {
        return std::string(e.what());
      }
      return std::string("no error");
    };
    const std::string ok = row("s1", "a", "baseline", "0,0,0,0,0,0,0,0,0,0");
    CHECK(message(header() + ok + row("s1", "a", "week52", "0,0,5,0,0,0,0,0,0,0")).rfind("t.csv:3: item05", 0) == 0);
    CHECK(message(header() + ok + "s2,a,baseline,0,0\n").rfind("t.csv:3: expected 13 fields", 0) == 0);
    CHECK(message(header() + ok + ok).rfind("t.csv:3: duplicate baseline row", 0) == 0);
    CHECK(message(header() + ok + row("s1", "b", "week52", "0,0,0,0,0,0,0,0,0,0")).rfind("t.csv:3: subject s1", 0) == 0);
    CHECK(message(header() + row("s1", "a", "week12", "0,0,0,0,0,0,0,0,0,0")).rfind("t.csv:2: visit", 0) == 0);
    CHECK(message("subject_id,arm,visit\n").rfind("t.csv:1: missing column 'item03'", 0) == 0);
    CHECK(message("subject_id,arm,colour\n").rfind("t.csv:1: unexpected column 'colour'", 0) == 0);
    CHECK(message("").find("empty file") != std::string::npos);
    CHECK(message(header() + row("s1", "a", "baseline", "0,0,0,0,0,0,0,0,0,1.5")).rfind("t.csv:2: item28", 0) == 0);
    CHECK_THROWS_AS(read_trial_csv("/nonexistent/trial.csv"), IoError);
  }

  TEST_CASE("rescoring keeps missing cells missing") {
    const TrialData t = read_trial_csv(psprs::testing::source_path("tests/fixtures/small_trial.csv"));
    const TrialData r = rescore_trial(t, ScoringScheme::fda_default());
    CHECK_FALSE((*r.subjects[1].week52)[3]);
    CHECK_FALSE((*r.subjects[5].baseline)[0]);
    const ItemDataset a = apply_rescoring(select_comparison(t, "drug", "placebo"), ScoringScheme::fda_default());
    const ItemDataset b = select_comparison(r, "drug", "placebo");
    CHECK(a.baseline == b.baseline);
    CHECK(a.week52 == b.week52);
  }
}

TEST_SUITE("descriptive table") {
  TEST_CASE("constant item has zero standard error") {
    RngStream rng(2);
    ItemDataset d = psprs::testing::random_item_dataset(20, rng);
    for (std::size_t i = 0; i < d.size(); ++i) d.baseline[i][6] = d.week52[i][6] = 3;
    const auto rows = descriptive_table(d, "T", "C");
    REQUIRE(rows.size() == 2 * (kItemCount + 1));
    for (int r : {12, 13}) {
      CHECK(rows[static_cast<std::size_t>(r)].item == "Ari.FC");
      CHECK(rows[static_cast<std::size_t>(r)].baseline_se == 0.0);
      CHECK(rows[static_cast<std::size_t>(r)].week52_se == 0.0);
      CHECK(rows[static_cast<std::size_t>(r)].change_se == 0.0);
    }
    CHECK_FALSE(rows[13].ancova_coef);  // singular fit is left blank
    CHECK(rows.back().item == "SumS");
  }

  TEST_CASE("means and standard errors match a spreadsheet recomputation") {
    RngStream rng(3);
    const ItemDataset d = psprs::testing::random_item_dataset(33, rng);
    const auto rows = descriptive_table(d, "T", "C");
    for (const auto& r : rows) {
      const Arm arm = r.arm == "T" ? Arm::kTreatment : Arm::kControl;
      // Sum and sum-of-squares formulas in extended precision.
      long double n = 0, sb = 0, sbb = 0, sc = 0, scc = 0;
      for (std::size_t i = 0; i < d.size(); ++i) {
        if (d.arm[i] != arm) continue;
        long double b = 0, w = 0;
        if (r.item == "SumS") {
          for (std::size_t k = 0; k < kItemCount; ++k) {
            b += d.baseline[i][k];
            w += d.week52[i][k];
          }
        } else {
          const auto k = static_cast<std::size_t>(
              std::find(kItemAbbreviations.begin(), kItemAbbreviations.end(), r.item) - kItemAbbreviations.begin());
          b = d.baseline[i][k];
          w = d.week52[i][k];
        }
        n += 1;
        sb += b;
        sbb += b * b;
        sc += w - b;
        scc += (w - b) * (w - b);
      }
      const long double mb = sb / n, mc = sc / n;
      const long double seb = std::sqrt((sbb - n * mb * mb) / (n - 1) / n);
      const long double sec = std::sqrt((scc - n * mc * mc) / (n - 1) / n);
      CHECK(static_cast<double>(n) == static_cast<double>(r.n));
      CHECK(std::fabs(r.baseline_mean - static_cast<double>(mb)) <= 1e-12);
      CHECK(std::fabs(r.change_mean - static_cast<double>(mc)) <= 1e-12);
      CHECK(std::fabs(r.baseline_se - static_cast<double>(seb)) <= 1e-12);
      CHECK(std::fabs(r.change_se - static_cast<double>(sec)) <= 1e-12);
      CHECK(std::fabs(r.week52_mean - r.baseline_mean - r.change_mean) <= 1e-12);
    }
  }

  TEST_CASE("column schema") {
    RngStream rng(4);
    const auto rows = descriptive_table(psprs::testing::random_item_dataset(10, rng), "T", "C");
    const std::string csv = descriptive_csv(rows);
    CHECK(first_line(csv) == joined(kDescriptiveColumns));
    CHECK(first_line(csv) ==
          "item,arm,n,baseline_mean,baseline_se,week52_mean,week52_se,change_mean,change_se,ancova_coef,ancova_se,ancova_p");
    std::istringstream in(csv);
    std::string line;
    std::size_t lines = 0;
    while (std::getline(in, line)) {
      ++lines;
      CHECK(std::count(line.begin(), line.end(), ',') == 11);
    }
    CHECK(lines == rows.size() + 1);
    CHECK(csv.find("Dysp.FS,C,10,") != std::string::npos);
  }
}

TEST_SUITE("reports") {
  TEST_CASE("empty tables are header-only") {
    CHECK(power_table_csv({}) == joined(kPowerColumns) + "\n");
    CHECK(method_results_csv({}) == joined(kMethodResultColumns) + "\n");
    CHECK(item_results_csv({}) == joined(kItemResultColumns) + "\n");
    CHECK(descriptive_csv({}) == joined(kDescriptiveColumns) + "\n");
    const auto doc = nlohmann::json::parse(power_table_json({}));
    CHECK(doc["rows"].empty());
    CHECK(first_line(power_table_plain({})).find("generator") != std::string::npos);
  }

  TEST_CASE("number formatting") {
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(std::nan("")) == "NA");
    CHECK(format_number(-INFINITY) == "-Inf");
    const double x = 0.1 + 0.2;
    CHECK(std::stod(format_number(x)) == x);
    CHECK(format_fixed(0.125, 2) == "0.12");
    CHECK(format_fixed(0.0049, 2) == "0.00");
    CHECK(report_format_from_string("table") == ReportFormat::kPlain);
    CHECK_THROWS_AS(report_format_from_string("xlsx"), InputError);
  }

  TEST_CASE("power table JSON keeps full precision") {
    PowerRow r{"mvn", "d1", "original", "SumS"};
    r.rejection_rate = 1.0 / 3.0;
    r.mc_se = mc_se(r.rejection_rate, 300);
    r.n_reps = 300;
    r.rejections = 100;
    const auto doc = nlohmann::json::parse(power_table_json({r}));
    CHECK(doc["rows"][0]["rejection_rate"].get<double>() == r.rejection_rate);
    CHECK(doc["rows"][0]["mc_se"].get<double>() == r.mc_se);
    CHECK(power_series_csv({r}).find("SumS") != std::string::npos);
  }

  TEST_CASE("unwritable path is an I/O error") {
    CHECK_THROWS_AS(write_text_file("/nonexistent/dir/out.csv", "x"), IoError);
  }
}

TEST_SUITE("reanalysis") {
  TEST_CASE("eleven methods by two comparisons by two schemes") {
    const auto& ctx = psprs::testing::shared_context();
    ReanalysisOptions opt;
    for (const auto& s : ctx.schemes) {
      opt.models.push_back(s.scorer->model());
      opt.approxes.push_back(*s.approx);
    }
    opt.allow_self_fit = false;
    opt.omnibus_items = ctx.omnibus_items;
    opt.omnibus_domains = ctx.omnibus_domains;
    const TrialData trial = three_arm_trial();
    const std::vector<Comparison> comps = {{"high", "placebo"}, {"low", "placebo"}};
    const ReanalysisReport rep = run_reanalysis(trial, comps, opt);
    REQUIRE(rep.methods.size() == 44);
    CHECK(rep.items.size() == 40);
    for (const auto& m : rep.methods) {
      CAPTURE(m.method);
      CHECK(m.error.empty());
      CHECK(m.p_value >= 0.0);
      CHECK(m.p_value <= 1.0);
    }
    CHECK(rep.methods[0].comparison == "high vs placebo");
    CHECK(rep.comparisons[0].n_treatment == 127);
    CHECK(rep.comparisons[0].n_control == 126);

    // Every p-value reappears in the document at full precision.
    const auto doc = nlohmann::json::parse(reanalysis_json(rep));
    REQUIRE(doc["methods"].size() == 44);
    for (std::size_t i = 0; i < 44; ++i) {
      CHECK(doc["methods"][i]["p_value"].get<double>() == rep.methods[i].p_value);
      CHECK_FALSE(doc["methods"][i].contains("error"));
    }
    const std::string csv = method_results_csv(rep.methods);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 45);
    CHECK(reanalysis_plain(rep).find("Omnibus-dom") != std::string::npos);

    // Same inputs, same report.
    CHECK(reanalysis_json(run_reanalysis(trial, comps, opt)) == reanalysis_json(rep));
  }

  TEST_CASE("without models the IRT-based methods fail as input errors") {
    const auto& ctx = psprs::testing::shared_context();
    ReanalysisOptions opt;
    opt.allow_self_fit = false;
    opt.schemes = {ScoringScheme::original()};
    opt.omnibus_items = ctx.omnibus_items;
    opt.omnibus_domains = ctx.omnibus_domains;
    const TrialData trial = read_trial_csv(psprs::testing::source_path("tests/fixtures/small_trial.csv"));
    const ReanalysisReport rep = run_reanalysis(trial, {{"drug", "placebo"}}, opt);
    REQUIRE(rep.methods.size() == 11);
    const auto doc = nlohmann::json::parse(reanalysis_json(rep));
    for (std::size_t i = 0; i < 11; ++i) {
      const bool irt_based = rep.methods[i].method == "IRT-PSIF" || rep.methods[i].method == "LM-PSIBPF";
      CHECK(rep.methods[i].error.empty() == !irt_based);
      CHECK(std::isnan(rep.methods[i].p_value) == irt_based);
      if (irt_based) {
        CHECK_FALSE(rep.methods[i].numerical);
        CHECK(doc["methods"][i]["error_kind"] == "input");
        CHECK(doc["methods"][i]["p_value"].is_null());
      }
    }
  }

  TEST_CASE("constant baseline items are reported as numerical failures") {
    const auto& ctx = psprs::testing::shared_context();
    ReanalysisOptions opt;
    opt.allow_self_fit = false;
    opt.schemes = {ScoringScheme::original()};
    opt.methods = {Method::kSumScore, Method::kOls, Method::kBonferroni};
    opt.omnibus_items = ctx.omnibus_items;
    const TrialData trial = read_trial_csv(psprs::testing::source_path("tests/fixtures/constant_baseline.csv"));
    const ReanalysisReport rep = run_reanalysis(trial, {{"drug", "placebo"}}, opt);
    REQUIRE(rep.methods.size() == 3);
    for (const auto& m : rep.methods) {
      CHECK_FALSE(m.error.empty());
      CHECK(m.numerical);
    }
    const auto doc = nlohmann::json::parse(reanalysis_json(rep));
    CHECK(doc["methods"][0]["error_kind"] == "numerical");
  }
}
