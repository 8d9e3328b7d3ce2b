#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace sparsevox {

// Percentile p in [0, 100] with linear interpolation between order statistics.
inline double percentile(std::span<const double> values, double p) {
  if (values.empty()) throw std::invalid_argument("percentile of an empty set");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double rank = std::clamp(p, 0.0, 100.0) / 100.0 * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = rank - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

// 1-based rank k of the smallest order statistic with empirical CDF k / n >= q.
inline std::size_t cdf_inverse_rank(std::size_t n, double q) {
  const double dn = static_cast<double>(n);
  auto k = static_cast<std::size_t>(std::max(1.0, std::ceil(q * dn)));
  k = std::min(k, n);
  while (k > 1 && static_cast<double>(k - 1) / dn >= q) --k;
  while (k < n && static_cast<double>(k) / dn < q) ++k;
  return k;
}

// Left-continuous inverse of the empirical CDF over a sorted sample: the smallest observed
// value t with F(t) >= q.
inline double empirical_cdf_inverse(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("empirical_cdf_inverse of an empty set");
  return sorted[cdf_inverse_rank(sorted.size(), q) - 1];
}

}  // namespace sparsevox
