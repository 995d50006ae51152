#ifndef VSGEO_ROBUST_STATS_HPP
#define VSGEO_ROBUST_STATS_HPP

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "vsgeo/errors.hpp"

namespace vsgeo {

enum class SummaryVariant { median_iqr, mean_sd };

struct SummaryPair {
  double center = 0.0;
  double dispersion = 0.0;
  SummaryVariant variant = SummaryVariant::median_iqr;
};

namespace detail {

// Smallest p-th sample quantile of an already sorted vector: the smallest
// order statistic v with (#{x <= v} / n) >= p.  The comparison is done on
// k/n as a double so the result agrees exactly with a scan of the ECDF.
inline double quantile_sorted(std::span<const double> sorted, double p) {
  const auto n = sorted.size();
  if (p <= 0.0) return sorted.front();
  std::size_t lo = 1, hi = n;
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (static_cast<double>(mid) / static_cast<double>(n) >= p)
      hi = mid;
    else
      lo = mid + 1;
  }
  return sorted[lo - 1];
}

}  // namespace detail

// Inverse-ECDF (type-1) sample quantile.
inline double quantile(std::span<const double> values, double p) {
  if (values.empty()) throw DomainError("quantile: empty vector");
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("quantile: p outside [0,1]");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  return detail::quantile_sorted(sorted, p);
}

inline SummaryPair summarize(std::span<const double> values, SummaryVariant variant) {
  if (values.empty()) throw DomainError("summarize: empty vector");
  SummaryPair out;
  out.variant = variant;
  if (variant == SummaryVariant::median_iqr) {
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    out.center = detail::quantile_sorted(sorted, 0.5);
    out.dispersion = detail::quantile_sorted(sorted, 0.75) - detail::quantile_sorted(sorted, 0.25);
  } else {
    const auto n = values.size();
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(n);
    out.center = mean;
    if (n > 1) {
      double ss = 0.0;
      for (double v : values) ss += (v - mean) * (v - mean);
      out.dispersion = std::sqrt(ss / static_cast<double>(n - 1));
    } else {
      out.dispersion = 0.0;
    }
  }
  return out;
}

}  // namespace vsgeo

#endif
