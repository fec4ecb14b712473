#include "psprs/multiplicity.hpp"

#include <algorithm>
#include <numeric>

#include "psprs/error.hpp"

namespace psprs {

namespace {

std::vector<std::size_t> ascending_order(std::span<const double> p) {
  std::vector<std::size_t> o(p.size());
  std::iota(o.begin(), o.end(), 0);
  std::stable_sort(o.begin(), o.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
  return o;
}

void require_nonempty(std::span<const double> p, const char* what) {
  if (p.empty()) throw InputError(std::string(what) + ": empty p-value vector");
}

}  // namespace

double bonferroni_global(std::span<const double> p) {
  require_nonempty(p, "bonferroni_global");
  const double lo = *std::min_element(p.begin(), p.end());
  return std::min(1.0, static_cast<double>(p.size()) * lo);
}

double simes_global(std::span<const double> p) {
  require_nonempty(p, "simes_global");
  std::vector<double> s(p.begin(), p.end());
  std::sort(s.begin(), s.end());
  const double m = static_cast<double>(s.size());
  double best = 1.0;
  for (std::size_t i = 0; i < s.size(); ++i) best = std::min(best, m / static_cast<double>(i + 1) * s[i]);
  return best;
}

std::vector<double> bonferroni_adjust(std::span<const double> p) {
  std::vector<double> out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = std::min(1.0, static_cast<double>(p.size()) * p[i]);
  return out;
}

std::vector<double> holm_adjust(std::span<const double> p) {
  const std::size_t n = p.size();
  const auto o = ascending_order(p);
  std::vector<double> out(n);
  double running = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const double v = std::min(1.0, static_cast<double>(n - r) * p[o[r]]);
    running = std::max(running, v);
    out[o[r]] = running;
  }
  return out;
}

std::vector<double> hommel_adjust(std::span<const double> p) {
  const std::size_t n = p.size();
  if (n <= 1) return std::vector<double>(p.begin(), p.end());
  const auto o = ascending_order(p);
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = p[o[i]];

  double init = 1.0;
  for (std::size_t i = 0; i < n; ++i) init = std::min(init, static_cast<double>(n) * s[i] / static_cast<double>(i + 1));
  std::vector<double> q(n, init), pa(n, init);
  for (std::size_t m = n - 1; m >= 2; --m) {
    const std::size_t n1 = n - m + 1;  // indices [0, n1) and [n1, n)
    double q1 = 1e300;
    for (std::size_t i = n1, j = 2; i < n; ++i, ++j) q1 = std::min(q1, static_cast<double>(m) * s[i] / static_cast<double>(j));
    for (std::size_t i = 0; i < n1; ++i) q[i] = std::min(static_cast<double>(m) * s[i], q1);
    for (std::size_t i = n1; i < n; ++i) q[i] = q[n1 - 1];
    for (std::size_t i = 0; i < n; ++i) pa[i] = std::max(pa[i], q[i]);
  }
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[o[i]] = std::min(1.0, std::max(pa[i], s[i]));
  return out;
}

}  // namespace psprs
