#include "psprs/trial_csv.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "psprs/error.hpp"

namespace psprs {

bool TrialSubject::complete() const {
  auto full = [](const std::optional<MaybeScores>& v) {
    return v && std::all_of(v->begin(), v->end(), [](const std::optional<int>& x) { return x.has_value(); });
  };
  return full(baseline) && full(week52);
}

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  s = s.substr(b, e - b + 1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
      cur += c;
    } else if (c == ',' && !quoted) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

std::string join_labels(const std::vector<std::string>& labels) {
  std::string s;
  for (const auto& l : labels) s += (s.empty() ? "" : ", ") + l;
  return s;
}

std::string where(const std::string& source, std::size_t line) {
  return source + ":" + std::to_string(line) + ": ";
}

std::string describe_missing(const TrialSubject& s) {
  std::vector<std::string> parts;
  auto scan = [&](const std::optional<MaybeScores>& v, const char* visit) {
    if (!v) {
      parts.push_back(std::string("no ") + visit + " row");
      return;
    }
    for (std::size_t k = 0; k < kItemCount; ++k) {
      if (!(*v)[k]) parts.push_back(std::string(visit) + " " + std::string(kItemColumns[k]) + " missing");
    }
  };
  scan(s.baseline, "baseline");
  scan(s.week52, "week52");
  std::string out;
  for (const auto& p : parts) out += (out.empty() ? "" : "; ") + p;
  return out;
}

ItemScores to_scores(const MaybeScores& v) {
  ItemScores out{};
  for (std::size_t k = 0; k < kItemCount; ++k) out[k] = *v[k];
  return out;
}

}  // namespace

TrialData parse_trial_csv(const std::string& text, const std::vector<std::string>& declared_arms,
                          const std::string& source) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::array<int, kTrialColumns.size()> pos{};
  pos.fill(-1);
  std::size_t n_cols = 0;

  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) break;
  }
  if (trim(line).empty()) throw InputError(source + ": empty file");
  {
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line = line.substr(3);
    const auto header = split(line);
    n_cols = header.size();
    for (std::size_t c = 0; c < header.size(); ++c) {
      const auto it = std::find(kTrialColumns.begin(), kTrialColumns.end(), header[c]);
      if (it == kTrialColumns.end()) {
        throw InputError(where(source, line_no) + "unexpected column '" + header[c] + "'");
      }
      auto& slot = pos[static_cast<std::size_t>(it - kTrialColumns.begin())];
      if (slot >= 0) throw InputError(where(source, line_no) + "duplicate column '" + header[c] + "'");
      slot = static_cast<int>(c);
    }
    for (std::size_t i = 0; i < kTrialColumns.size(); ++i) {
      if (pos[i] < 0) throw InputError(where(source, line_no) + "missing column '" + std::string(kTrialColumns[i]) + "'");
    }
  }

  TrialData out;
  std::unordered_map<std::string, std::size_t> index;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    if (cells.size() != n_cols) {
      throw InputError(where(source, line_no) + "expected " + std::to_string(n_cols) + " fields, found " +
                       std::to_string(cells.size()));
    }
    const std::string& id = cells[static_cast<std::size_t>(pos[0])];
    const std::string& arm = cells[static_cast<std::size_t>(pos[1])];
    const std::string& visit = cells[static_cast<std::size_t>(pos[2])];
    if (id.empty()) throw InputError(where(source, line_no) + "empty subject_id");
    if (arm.empty()) throw InputError(where(source, line_no) + "empty arm");
    if (!declared_arms.empty() && std::find(declared_arms.begin(), declared_arms.end(), arm) == declared_arms.end()) {
      throw InputError(where(source, line_no) + "unknown arm label '" + arm + "'; allowed: " + join_labels(declared_arms));
    }
    if (visit != "baseline" && visit != "week52") {
      throw InputError(where(source, line_no) + "visit must be 'baseline' or 'week52', found '" + visit + "'");
    }
    MaybeScores scores{};
    for (std::size_t k = 0; k < kItemCount; ++k) {
      const std::string& cell = cells[static_cast<std::size_t>(pos[3 + k])];
      if (cell.empty() || cell == "NA") continue;
      if (cell.size() != 1 || cell[0] < '0' || cell[0] > '4') {
        throw InputError(where(source, line_no) + std::string(kItemColumns[k]) + " must be an integer 0..4 or empty, found '" +
                         cell + "'");
      }
      scores[k] = cell[0] - '0';
    }
    auto [it, inserted] = index.emplace(id, out.subjects.size());
    if (inserted) {
      out.subjects.push_back(TrialSubject{id, arm, std::nullopt, std::nullopt});
      if (std::find(out.arms.begin(), out.arms.end(), arm) == out.arms.end()) out.arms.push_back(arm);
    }
    TrialSubject& s = out.subjects[it->second];
    if (s.arm != arm) {
      throw InputError(where(source, line_no) + "subject " + id + " appears in arms '" + s.arm + "' and '" + arm + "'");
    }
    auto& slot = visit == "baseline" ? s.baseline : s.week52;
    if (slot) throw InputError(where(source, line_no) + "duplicate " + visit + " row for subject " + id);
    slot = scores;
  }
  return out;
}

TrialData read_trial_csv(const std::string& path, const std::vector<std::string>& declared_arms) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_trial_csv(buf.str(), declared_arms, path);
}

ItemDataset select_comparison(const TrialData& trial, const std::string& treatment, const std::string& control,
                              CompleteCaseLog* log) {
  for (const auto& label : {treatment, control}) {
    if (std::find(trial.arms.begin(), trial.arms.end(), label) == trial.arms.end()) {
      throw InputError("arm '" + label + "' not present; available: " + join_labels(trial.arms));
    }
  }
  if (treatment == control) throw InputError("treatment and control arms must differ");
  ItemDataset out;
  for (const auto& s : trial.subjects) {
    if (s.arm != treatment && s.arm != control) continue;
    if (!s.complete()) {
      if (log != nullptr) {
        log->excluded[s.arm] += 1;
        log->exclusions.push_back("subject " + s.id + " (" + s.arm + "): " + describe_missing(s));
      }
      continue;
    }
    if (log != nullptr) log->retained[s.arm] += 1;
    out.push_back(s.id, s.arm == treatment ? Arm::kTreatment : Arm::kControl, to_scores(*s.baseline),
                  to_scores(*s.week52));
  }
  return out;
}

ItemDataset pooled_complete_cases(const TrialData& trial, CompleteCaseLog* log) {
  ItemDataset out;
  for (const auto& s : trial.subjects) {
    if (!s.complete()) {
      if (log != nullptr) {
        log->excluded[s.arm] += 1;
        log->exclusions.push_back("subject " + s.id + " (" + s.arm + "): " + describe_missing(s));
      }
      continue;
    }
    if (log != nullptr) log->retained[s.arm] += 1;
    const bool first = !trial.arms.empty() && s.arm == trial.arms.front();
    out.push_back(s.id, first ? Arm::kControl : Arm::kTreatment, to_scores(*s.baseline), to_scores(*s.week52));
  }
  return out;
}

ItemDataset load_trial_csv(const std::string& path, const std::string& treatment, const std::string& control,
                           CompleteCaseLog* log, const std::vector<std::string>& declared_arms) {
  return select_comparison(read_trial_csv(path, declared_arms), treatment, control, log);
}

namespace {

std::string header_line() {
  std::string h;
  for (auto c : kTrialColumns) h += (h.empty() ? "" : ",") + std::string(c);
  return h + "\n";
}

void append_row(std::ostringstream& out, const std::string& id, const std::string& arm, const char* visit,
                const MaybeScores& scores) {
  out << id << ',' << arm << ',' << visit;
  for (const auto& v : scores) {
    out << ',';
    if (v) out << *v;
  }
  out << '\n';
}

MaybeScores to_maybe(const ItemScores& s) {
  MaybeScores m{};
  for (std::size_t k = 0; k < kItemCount; ++k) m[k] = s[k];
  return m;
}

void write_text(const std::string& text, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace

std::string format_trial_csv(const ItemDataset& data, const std::string& treatment_label,
                             const std::string& control_label) {
  std::ostringstream out;
  out << header_line();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::string& arm = data.arm[i] == Arm::kTreatment ? treatment_label : control_label;
    append_row(out, data.ids[i], arm, "baseline", to_maybe(data.baseline[i]));
    append_row(out, data.ids[i], arm, "week52", to_maybe(data.week52[i]));
  }
  return out.str();
}

void write_trial_csv(const ItemDataset& data, const std::string& path, const std::string& treatment_label,
                     const std::string& control_label) {
  write_text(format_trial_csv(data, treatment_label, control_label), path);
}

std::string format_trial_csv(const TrialData& trial) {
  std::ostringstream out;
  out << header_line();
  for (const auto& s : trial.subjects) {
    if (s.baseline) append_row(out, s.id, s.arm, "baseline", *s.baseline);
    if (s.week52) append_row(out, s.id, s.arm, "week52", *s.week52);
  }
  return out.str();
}

void write_trial_csv(const TrialData& trial, const std::string& path) { write_text(format_trial_csv(trial), path); }

}  // namespace psprs

namespace psprs {

TrialData rescore_trial(const TrialData& trial, const ScoringScheme& scheme) {
  scheme.validate();
  TrialData out = trial;
  auto map = [&](std::optional<MaybeScores>& v) {
    if (!v) return;
    for (std::size_t k = 0; k < kItemCount; ++k) {
      if ((*v)[k]) (*v)[k] = scheme.maps[k][static_cast<std::size_t>(*(*v)[k])];
    }
  };
  for (auto& s : out.subjects) {
    map(s.baseline);
    map(s.week52);
  }
  return out;
}

}  // namespace psprs
