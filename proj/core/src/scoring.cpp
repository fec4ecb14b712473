#include "psprs/scoring.hpp"

#include <fstream>
#include <json.hpp>

#include "psprs/dataset.hpp"
#include "psprs/error.hpp"

namespace psprs {

using nlohmann::json;

bool ScoringScheme::is_identity() const {
  for (const auto& m : maps) {
    for (int c = 0; c < kOriginalCategories; ++c) {
      if (m[static_cast<std::size_t>(c)] != c) return false;
    }
  }
  return true;
}

void ScoringScheme::validate() const {
  if (name.empty()) throw ConfigError("scoring scheme: empty name");
  for (std::size_t k = 0; k < kItemCount; ++k) {
    const auto& m = maps[k];
    if (m[0] != 0) throw ConfigError("scoring scheme " + name + ": map for " + std::string(kItemColumns[k]) + " must start at 0");
    for (std::size_t c = 1; c < m.size(); ++c) {
      const int step = m[c] - m[c - 1];
      if (step < 0) throw ConfigError("scoring scheme " + name + ": map for " + std::string(kItemColumns[k]) + " is not monotone");
      if (step > 1) throw ConfigError("scoring scheme " + name + ": map for " + std::string(kItemColumns[k]) + " is not onto");
    }
  }
}

ScoringScheme ScoringScheme::original() {
  ScoringScheme s;
  s.name = "original";
  for (auto& m : s.maps) m = {0, 1, 2, 3, 4};
  return s;
}

ScoringScheme ScoringScheme::fda_default() {
  ScoringScheme s;
  s.name = "fda-collapse";
  s.maps = {{
      {0, 1, 2, 3, 4},  // item03 Dysp.FS: unchanged
      {0, 1, 2, 3, 3},  // item04 Use.KF
      {0, 0, 1, 1, 2},  // item05 Fall
      {0, 1, 1, 2, 2},  // item12 Dysa.
      {0, 1, 2, 3, 4},  // item13 Dysp.: unchanged
      {0, 1, 1, 2, 2},  // item24 Neck.Ri
      {0, 0, 0, 1, 2},  // item25 Ari.FC
      {0, 0, 1, 1, 2},  // item26 Gait
      {0, 0, 1, 1, 2},  // item27 Pos.St
      {0, 0, 1, 1, 2},  // item28 Sit
  }};
  return s;
}

ScoringScheme load_scheme(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scheme file " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("scheme file " + path + ": " + e.what());
  }
  ScoringScheme s = ScoringScheme::original();
  try {
    s.name = doc.at("name").get<std::string>();
    if (doc.contains("maps")) {
      for (const auto& [key, value] : doc.at("maps").items()) {
        std::size_t k = kItemCount;
        for (std::size_t j = 0; j < kItemCount; ++j) {
          if (kItemColumns[j] == key) k = j;
        }
        if (k == kItemCount) throw ConfigError("scheme file " + path + ": unknown item " + key);
        const auto arr = value.get<std::vector<int>>();
        if (arr.size() != kOriginalCategories) throw ConfigError("scheme file " + path + ": map for " + key + " needs 5 entries");
        std::copy(arr.begin(), arr.end(), s.maps[k].begin());
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError("scheme file " + path + ": " + e.what());
  }
  s.validate();
  return s;
}

void save_scheme(const ScoringScheme& scheme, const std::string& path) {
  json doc;
  doc["name"] = scheme.name;
  for (std::size_t k = 0; k < kItemCount; ++k) doc["maps"][std::string(kItemColumns[k])] = scheme.maps[k];
  std::ofstream out(path);
  if (!out) throw IoError("cannot write scheme file " + path);
  out << doc.dump(2) << '\n';
}

ScoringScheme resolve_scheme(const std::string& name_or_path) {
  if (name_or_path == "original") return ScoringScheme::original();
  if (name_or_path == "fda-collapse" || name_or_path == "fda") return ScoringScheme::fda_default();
  return load_scheme(name_or_path);
}

ItemDataset apply_rescoring(const ItemDataset& data, const ScoringScheme& scheme) {
  if (data.scheme != "original") throw InputError("apply_rescoring: input must be in original scoring, got " + data.scheme);
  ItemDataset out = data;
  out.scheme = scheme.name;
  if (scheme.is_identity()) return out;
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (std::size_t k = 0; k < kItemCount; ++k) {
      const int b = out.baseline[i][k];
      const int w = out.week52[i][k];
      if (b < 0 || b >= kOriginalCategories || w < 0 || w >= kOriginalCategories) {
        throw InputError("apply_rescoring: score outside 0..4 for subject " + out.ids[i]);
      }
      out.baseline[i][k] = scheme.maps[k][static_cast<std::size_t>(b)];
      out.week52[i][k] = scheme.maps[k][static_cast<std::size_t>(w)];
    }
  }
  return out;
}

}  // namespace psprs
