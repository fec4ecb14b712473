#include "psprs/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <map>
#include <sstream>

#include "psprs/error.hpp"

namespace psprs {

using nlohmann::json;
using nlohmann::ordered_json;

ReportFormat report_format_from_string(const std::string& s) {
  if (s == "csv") return ReportFormat::kCsv;
  if (s == "json") return ReportFormat::kJson;
  if (s == "plain" || s == "table") return ReportFormat::kPlain;
  throw InputError("unknown report format '" + s + "' (expected csv, json or plain)");
}

std::string extension(ReportFormat f) {
  switch (f) {
    case ReportFormat::kCsv:
      return ".csv";
    case ReportFormat::kJson:
      return ".json";
    case ReportFormat::kPlain:
      return ".txt";
  }
  return "";
}

std::string format_number(double x) {
  if (std::isnan(x)) return "NA";
  if (std::isinf(x)) return x > 0 ? "Inf" : "-Inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

std::string format_fixed(double x, int decimals) {
  if (std::isnan(x)) return "NA";
  if (std::isinf(x)) return x > 0 ? "Inf" : "-Inf";
  std::ostringstream o;
  o.setf(std::ios::fixed);
  o.precision(decimals);
  o << x;
  return o.str();
}

namespace {

using Row = std::vector<std::string>;

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

template <std::size_t N>
std::string to_csv(const std::array<std::string_view, N>& columns, const std::vector<Row>& rows) {
  std::ostringstream out;
  for (std::size_t c = 0; c < N; ++c) out << (c ? "," : "") << columns[c];
  out << '\n';
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.size(); ++c) out << (c ? "," : "") << csv_escape(r[c]);
    out << '\n';
  }
  return out.str();
}

std::string to_plain(const std::vector<std::string>& columns, const std::vector<Row>& rows) {
  std::vector<std::size_t> width(columns.size());
  for (std::size_t c = 0; c < columns.size(); ++c) width[c] = columns[c].size();
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.size() && c < width.size(); ++c) width[c] = std::max(width[c], r[c].size());
  }
  std::ostringstream out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      out << (c ? "  " : "") << cells[c] << std::string(width[c] - cells[c].size(), ' ');
    }
    out << '\n';
  };
  line(columns);
  std::vector<std::string> rule;
  for (auto w : width) rule.emplace_back(w, '-');
  line(rule);
  for (const auto& r : rows) line(r);
  return out.str();
}

template <std::size_t N>
std::vector<std::string> names(const std::array<std::string_view, N>& a) {
  return std::vector<std::string>(a.begin(), a.end());
}

json number_or_null(double x) {
  if (std::isnan(x)) return nullptr;
  if (std::isinf(x)) return x > 0 ? "Inf" : "-Inf";
  return x;
}

std::string opt(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

}  // namespace

std::string power_table_csv(const PowerTable& table) {
  std::vector<Row> rows;
  for (const auto& r : table) {
    rows.push_back({r.generator, r.scenario, r.scheme, r.method, format_number(r.rejection_rate), format_number(r.mc_se),
                    std::to_string(r.n_reps), std::to_string(r.rejections), std::to_string(r.failures)});
  }
  return to_csv(kPowerColumns, rows);
}

std::string power_table_json(const PowerTable& table, const std::string& plan_json) {
  ordered_json doc;
  doc["format"] = "psprs-power-table";
  doc["version"] = 1;
  if (!plan_json.empty()) doc["plan"] = ordered_json::parse(plan_json);
  ordered_json rows = ordered_json::array();
  for (const auto& r : table) {
    ordered_json row;
    row["generator"] = r.generator;
    row["scenario"] = r.scenario;
    row["scheme"] = r.scheme;
    row["method"] = r.method;
    row["rejection_rate"] = r.rejection_rate;
    row["mc_se"] = r.mc_se;
    row["n_reps"] = r.n_reps;
    row["rejections"] = r.rejections;
    row["failures"] = r.failures;
    rows.push_back(row);
  }
  doc["rows"] = rows;
  return doc.dump(2) + "\n";
}

std::string power_table_plain(const PowerTable& table) {
  std::vector<Row> rows;
  for (const auto& r : table) {
    rows.push_back({r.generator, r.scenario, r.scheme, r.method, format_fixed(r.rejection_rate, 4), format_fixed(r.mc_se, 4),
                    std::to_string(r.n_reps), std::to_string(r.rejections), std::to_string(r.failures)});
  }
  return to_plain(names(kPowerColumns), rows);
}

std::string render_power_table(const PowerTable& table, ReportFormat f) {
  switch (f) {
    case ReportFormat::kCsv:
      return power_table_csv(table);
    case ReportFormat::kJson:
      return power_table_json(table);
    case ReportFormat::kPlain:
      return power_table_plain(table);
  }
  return {};
}

std::string power_series_csv(const PowerTable& table) {
  std::vector<std::string> methods;
  for (const auto& r : table) {
    if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) methods.push_back(r.method);
  }
  std::ostringstream out;
  out << "generator,scheme,scenario";
  for (const auto& m : methods) out << ',' << csv_escape(m);
  out << '\n';
  // Preserve the table order of (generator, scheme, scenario) keys.
  std::vector<std::array<std::string, 3>> keys;
  std::map<std::array<std::string, 3>, std::map<std::string, double>> cells;
  for (const auto& r : table) {
    const std::array<std::string, 3> key = {r.generator, r.scheme, r.scenario};
    if (!cells.count(key)) keys.push_back(key);
    cells[key][r.method] = r.rejection_rate;
  }
  std::stable_sort(keys.begin(), keys.end(), [](const auto& a, const auto& b) {
    return std::tie(a[0], a[1]) < std::tie(b[0], b[1]);
  });
  for (const auto& key : keys) {
    out << csv_escape(key[0]) << ',' << csv_escape(key[1]) << ',' << csv_escape(key[2]);
    for (const auto& m : methods) {
      const auto& row = cells[key];
      const auto it = row.find(m);
      out << ',' << (it == row.end() ? std::string() : format_number(it->second));
    }
    out << '\n';
  }
  return out.str();
}

std::string descriptive_csv(const std::vector<DescriptiveRow>& rows) {
  std::vector<Row> out;
  for (const auto& r : rows) {
    out.push_back({r.item, r.arm, std::to_string(r.n), format_number(r.baseline_mean), format_number(r.baseline_se),
                   format_number(r.week52_mean), format_number(r.week52_se), format_number(r.change_mean),
                   format_number(r.change_se), opt(r.ancova_coef), opt(r.ancova_se), opt(r.ancova_p)});
  }
  return to_csv(kDescriptiveColumns, out);
}

std::string descriptive_plain(const std::vector<DescriptiveRow>& rows) {
  auto ms = [](double m, double se) { return format_fixed(m, 3) + " (" + format_fixed(se, 3) + ")"; };
  std::vector<Row> out;
  for (const auto& r : rows) {
    std::string anc, p;
    if (r.ancova_coef) anc = ms(*r.ancova_coef, *r.ancova_se);
    if (r.ancova_p) p = format_fixed(*r.ancova_p, 3);
    out.push_back({r.item, r.arm, std::to_string(r.n), ms(r.baseline_mean, r.baseline_se), ms(r.week52_mean, r.week52_se),
                   ms(r.change_mean, r.change_se), anc, p});
  }
  return to_plain({"item", "arm", "n", "baseline", "week52", "change", "ancova coef (se)", "p"}, out);
}

std::string method_results_csv(const std::vector<MethodResult>& rows) {
  std::vector<Row> out;
  for (const auto& r : rows) {
    std::string dropped;
    for (const auto& d : r.dropped_items) dropped += (dropped.empty() ? "" : ";") + d;
    out.push_back({r.comparison, r.scheme, r.method, format_number(r.statistic), format_number(r.p_value), dropped, r.error});
  }
  return to_csv(kMethodResultColumns, out);
}

std::string item_results_csv(const std::vector<ItemResult>& rows) {
  std::vector<Row> out;
  for (const auto& r : rows) {
    out.push_back({r.comparison, r.scheme, r.item, r.abbreviation, format_number(r.coef), format_number(r.se),
                   format_number(r.t), format_number(r.p), format_number(r.holm), format_number(r.hommel),
                   format_number(r.gls_weight)});
  }
  return to_csv(kItemResultColumns, out);
}

std::string reanalysis_json(const ReanalysisReport& report) {
  ordered_json doc;
  doc["format"] = "psprs-reanalysis";
  doc["version"] = 1;
  ordered_json comps = ordered_json::array();
  for (const auto& c : report.comparisons) {
    ordered_json j;
    j["comparison"] = c.label;
    j["n_treatment"] = c.n_treatment;
    j["n_control"] = c.n_control;
    j["retained"] = c.log.retained;
    j["excluded"] = c.log.excluded;
    j["exclusions"] = c.log.exclusions;
    comps.push_back(j);
  }
  doc["comparisons"] = comps;
  ordered_json desc = ordered_json::object();
  for (const auto& [label, rows] : report.descriptives) {
    ordered_json arr = ordered_json::array();
    for (const auto& r : rows) {
      ordered_json j;
      j["item"] = r.item;
      j["arm"] = r.arm;
      j["n"] = r.n;
      j["baseline_mean"] = r.baseline_mean;
      j["baseline_se"] = r.baseline_se;
      j["week52_mean"] = r.week52_mean;
      j["week52_se"] = r.week52_se;
      j["change_mean"] = r.change_mean;
      j["change_se"] = r.change_se;
      j["ancova_coef"] = r.ancova_coef ? number_or_null(*r.ancova_coef) : json(nullptr);
      j["ancova_se"] = r.ancova_se ? number_or_null(*r.ancova_se) : json(nullptr);
      j["ancova_p"] = r.ancova_p ? number_or_null(*r.ancova_p) : json(nullptr);
      arr.push_back(j);
    }
    desc[label] = arr;
  }
  doc["descriptives"] = desc;
  ordered_json methods = ordered_json::array();
  for (const auto& r : report.methods) {
    ordered_json j;
    j["comparison"] = r.comparison;
    j["scheme"] = r.scheme;
    j["method"] = r.method;
    j["statistic"] = number_or_null(r.statistic);
    j["p_value"] = number_or_null(r.p_value);
    if (!r.dropped_items.empty()) j["dropped_items"] = r.dropped_items;
    if (!r.warnings.empty()) j["warnings"] = r.warnings;
    if (!r.error.empty()) {
      j["error"] = r.error;
      j["error_kind"] = r.numerical ? "numerical" : "input";
    }
    methods.push_back(j);
  }
  doc["methods"] = methods;
  ordered_json items = ordered_json::array();
  for (const auto& r : report.items) {
    ordered_json j;
    j["comparison"] = r.comparison;
    j["scheme"] = r.scheme;
    j["item"] = r.item;
    j["abbreviation"] = r.abbreviation;
    j["coef"] = number_or_null(r.coef);
    j["se"] = number_or_null(r.se);
    j["t"] = number_or_null(r.t);
    j["p"] = number_or_null(r.p);
    j["holm"] = number_or_null(r.holm);
    j["hommel"] = number_or_null(r.hommel);
    j["gls_weight"] = number_or_null(r.gls_weight);
    items.push_back(j);
  }
  doc["items"] = items;
  ordered_json approx = ordered_json::array();
  for (const auto& a : report.approximations) {
    ordered_json j;
    j["scheme"] = a.scheme;
    j["model_source"] = a.model_source;
    j["approx_source"] = a.approx_source;
    j["intercept"] = a.approx.intercept;
    j["weights"] = a.approx.weights;
    j["normalized_weights"] = a.approx.normalized_weights();
    j["r_squared"] = a.approx.r_squared;
    j["corr_with_eap"] = number_or_null(a.corr_with_eap);
    approx.push_back(j);
  }
  doc["approximations"] = approx;
  doc["notes"] = report.notes;
  return doc.dump(2) + "\n";
}

std::string reanalysis_plain(const ReanalysisReport& report) {
  std::ostringstream out;
  for (const auto& c : report.comparisons) {
    out << c.label << ": " << c.n_treatment << " treated, " << c.n_control << " control complete cases";
    std::size_t excluded = 0;
    for (const auto& [arm, n] : c.log.excluded) excluded += n;
    if (excluded) out << " (" << excluded << " excluded)";
    out << '\n';
  }
  out << '\n';

  // Global tests: methods as rows, (comparison, scheme) as columns.
  std::vector<std::string> methods;
  std::vector<std::string> groups;
  std::map<std::pair<std::string, std::string>, std::string> cell;
  for (const auto& r : report.methods) {
    if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) methods.push_back(r.method);
    const std::string g = r.comparison + " [" + r.scheme + "]";
    if (std::find(groups.begin(), groups.end(), g) == groups.end()) groups.push_back(g);
    cell[{r.method, g}] = r.error.empty() ? format_fixed(r.p_value, 2) : "fail";
  }
  std::vector<std::string> cols = {"method"};
  cols.insert(cols.end(), groups.begin(), groups.end());
  std::vector<Row> rows;
  for (const auto& m : methods) {
    Row row = {m};
    for (const auto& g : groups) row.push_back(cell.count({m, g}) ? cell[{m, g}] : "");
    rows.push_back(row);
  }
  out << "One-sided p-values\n" << to_plain(cols, rows) << '\n';

  std::vector<Row> item_rows;
  for (const auto& r : report.items) {
    item_rows.push_back({r.comparison, r.scheme, r.abbreviation,
                         format_fixed(r.coef, 3) + " (" + format_fixed(r.se, 3) + ")", format_fixed(r.p, 3),
                         format_fixed(r.holm, 3), format_fixed(r.hommel, 3), format_fixed(r.gls_weight, 3)});
  }
  if (!item_rows.empty()) {
    out << "Marginal ANCOVA per item\n"
        << to_plain({"comparison", "scheme", "item", "coef (se)", "p", "holm", "hommel", "gls weight"}, item_rows) << '\n';
  }
  for (const auto& a : report.approximations) {
    out << "Latent approximation [" << a.scheme << "] model " << a.model_source << ", weights " << a.approx_source
        << ": R^2 = " << format_fixed(a.approx.r_squared, 4) << ", corr(approx, EAP) = " << format_fixed(a.corr_with_eap, 4)
        << "\n  normalized weights:";
    const auto w = a.approx.normalized_weights();
    for (std::size_t k = 0; k < kItemCount; ++k) out << ' ' << kItemAbbreviations[k] << '=' << format_fixed(w[k], 3);
    out << '\n';
  }
  for (const auto& n : report.notes) out << "note: " << n << '\n';
  for (const auto& r : report.methods) {
    for (const auto& w : r.warnings) out << "warning (" << r.comparison << ", " << r.scheme << ", " << r.method << "): " << w << '\n';
  }
  return out.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace psprs
