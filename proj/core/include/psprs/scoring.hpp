#pragma once

#include <array>
#include <string>

#include "psprs/items.hpp"

namespace psprs {

/// Per-item monotone, onto maps from the original 0..4 levels to a coarser
/// category set 0..C_k-1.
struct ScoringScheme {
  std::string name = "original";
  std::array<std::array<int, kOriginalCategories>, kItemCount> maps{};

  /// Number of categories of item k after mapping.
  int categories(std::size_t item) const { return maps[item][kOriginalCategories - 1] + 1; }
  bool is_identity() const;

  /// Throws ConfigError unless every map starts at 0, is nondecreasing with
  /// steps of at most one (i.e. onto 0..C-1).
  void validate() const;

  static ScoringScheme original();
  /// Built-in collapse maps. NOT AUTHORITATIVE: the official level-collapse
  /// table is a configuration input; see config/fda_collapse.json.
  static ScoringScheme fda_default();
};

/// Reads a scheme file: {"name": ..., "maps": {"item03": [0,0,1,1,2], ...}}.
/// Items absent from "maps" keep the identity map.
ScoringScheme load_scheme(const std::string& path);
void save_scheme(const ScoringScheme& scheme, const std::string& path);

/// Resolves "original", "fda-collapse" or a path to a scheme file.
ScoringScheme resolve_scheme(const std::string& name_or_path);

}  // namespace psprs
