#include "psprs/dataset.hpp"

#include <algorithm>
#include <string>

#include "psprs/error.hpp"

namespace psprs {

std::vector<std::size_t> domain_items(Domain d) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < kItemCount; ++k) {
    if (kItemDomain[k] == d) out.push_back(k);
  }
  return out;
}

std::size_t ItemDataset::count(Arm a) const noexcept {
  return static_cast<std::size_t>(std::count(arm.begin(), arm.end(), a));
}

void ItemDataset::reserve(std::size_t n) {
  ids.reserve(n);
  arm.reserve(n);
  baseline.reserve(n);
  week52.reserve(n);
}

void ItemDataset::push_back(std::string id, Arm a, const ItemScores& base, const ItemScores& w52) {
  ids.push_back(std::move(id));
  arm.push_back(a);
  baseline.push_back(base);
  week52.push_back(w52);
}

void ItemDataset::validate(const ScoringScheme& s) const {
  const std::size_t n = arm.size();
  if (ids.size() != n || baseline.size() != n || week52.size() != n) throw InputError("ItemDataset: ragged columns");
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < kItemCount; ++k) {
      const int hi = s.categories(k) - 1;
      for (int v : {baseline[i][k], week52[i][k]}) {
        if (v < 0 || v > hi) {
          throw InputError("ItemDataset: subject " + ids[i] + " item " + std::string(kItemColumns[k]) + " score " +
                           std::to_string(v) + " outside 0.." + std::to_string(hi));
        }
      }
    }
  }
}

ResponseRows pool_visits(const ItemDataset& data) {
  ResponseRows out;
  out.scheme = data.scheme;
  out.rows.reserve(2 * data.size());
  out.rows.insert(out.rows.end(), data.baseline.begin(), data.baseline.end());
  out.rows.insert(out.rows.end(), data.week52.begin(), data.week52.end());
  return out;
}

std::vector<double> item_column(const std::vector<ItemScores>& visit, std::size_t item) {
  std::vector<double> out(visit.size());
  for (std::size_t i = 0; i < visit.size(); ++i) out[i] = visit[i][item];
  return out;
}

std::vector<double> sum_scores(const std::vector<ItemScores>& visit) {
  std::vector<double> out(visit.size());
  for (std::size_t i = 0; i < visit.size(); ++i) {
    int s = 0;
    for (int v : visit[i]) s += v;
    out[i] = s;
  }
  return out;
}

std::vector<double> domain_scores(const std::vector<ItemScores>& visit, Domain d) {
  const auto items = domain_items(d);
  std::vector<double> out(visit.size());
  for (std::size_t i = 0; i < visit.size(); ++i) {
    int s = 0;
    for (std::size_t k : items) s += visit[i][k];
    out[i] = s;
  }
  return out;
}

}  // namespace psprs
