#ifndef VSGEO_VERACITY_HPP
#define VSGEO_VERACITY_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "vsgeo/dataset.hpp"
#include "vsgeo/errors.hpp"
#include "vsgeo/grid_index.hpp"
#include "vsgeo/robust_stats.hpp"

namespace vsgeo {

struct VeracityConfig {
  double delta = 0.0;  // <= 0 selects the density-based default
  double alpha = 0.0;
  SummaryVariant variant = SummaryVariant::median_iqr;
  bool include_self = true;
  int min_neighbors = 5;

  void validate() const {
    if (!(alpha >= 0.0)) throw ParameterError("veracity: alpha must be >= 0");
    if (min_neighbors < 1) throw ParameterError("veracity: min_neighbors must be >= 1");
  }
};

struct VeracityScores {
  Eigen::VectorXd scores;
  VeracityConfig config;              // with the resolved delta
  std::vector<int> neighbor_counts;   // n(i) actually used for the summary
  std::vector<bool> sparse_fallback;  // true where the nearest-point fallback fired
};

// phi(t) = exp(-t), the score of a scaled deviation t.
inline double veracity_function(double t) {
  if (!(t >= 0.0)) throw DomainError("veracity_function: negative argument");
  return std::exp(-t);
}

// Half-width making the average square neighborhood hold about 20 points:
// 4*delta^2 * (n / area) = 20 over the bounding box.
inline double default_delta(std::span<const Location> locations) {
  double lox = locations[0].x, hix = locations[0].x;
  double loy = locations[0].y, hiy = locations[0].y;
  for (const auto& s : locations) {
    lox = std::min(lox, s.x);
    hix = std::max(hix, s.x);
    loy = std::min(loy, s.y);
    hiy = std::max(hiy, s.y);
  }
  const double area = (hix - lox) * (hiy - loy);
  if (area > 0.0) return std::sqrt(5.0 * area / static_cast<double>(locations.size()));
  const double span = std::max(hix - lox, hiy - loy);
  return span > 0.0 ? span / 4.0 : 1.0;
}

namespace detail {

// 2*min_neighbors nearest observations by Chebyshev distance, ties broken
// by index so the result is deterministic.
inline std::vector<std::size_t> nearest_fallback(std::span<const Location> locations,
                                                 std::size_t i, bool include_self, int min_neighbors) {
  std::vector<std::pair<double, std::size_t>> dist;
  dist.reserve(locations.size());
  for (std::size_t j = 0; j < locations.size(); ++j) {
    if (!include_self && j == i) continue;
    const double d = std::max(std::abs(locations[j].x - locations[i].x),
                              std::abs(locations[j].y - locations[i].y));
    dist.emplace_back(d, j);
  }
  const std::size_t k = std::min<std::size_t>(dist.size(), 2u * static_cast<std::size_t>(min_neighbors));
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
  std::vector<std::size_t> out;
  out.reserve(k);
  for (std::size_t r = 0; r < k; ++r) out.push_back(dist[r].second);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace detail

// Neighborhood membership for every observation under a veracity config,
// including the sparse fallback.  Shared by scoring and residual smoothing
// so both always see the same windows.
inline std::vector<Neighborhood> score_neighborhoods(const SpatialDataset& ds,
                                                     const VeracityConfig& cfg_in,
                                                     VeracityConfig* resolved = nullptr,
                                                     std::vector<bool>* fallback = nullptr) {
  cfg_in.validate();
  if (ds.n() < 1) throw DomainError("veracity: empty dataset");
  VeracityConfig cfg = cfg_in;
  if (!(cfg.delta > 0.0)) cfg.delta = default_delta(ds.locations);
  const GridIndex index(ds.locations, 2.0 * cfg.delta);

  std::vector<Neighborhood> out(static_cast<std::size_t>(ds.n()));
  if (fallback) fallback->assign(static_cast<std::size_t>(ds.n()), false);
  for (std::size_t i = 0; i < out.size(); ++i) {
    Neighborhood nb = index.query_square(ds.locations[i], cfg.delta, i);
    if (!cfg.include_self)
      std::erase(nb.member_indices, i);
    if (nb.member_indices.size() < static_cast<std::size_t>(cfg.min_neighbors)) {
      nb.member_indices = detail::nearest_fallback(ds.locations, i, cfg.include_self, cfg.min_neighbors);
      if (fallback) (*fallback)[i] = true;
    }
    out[i] = std::move(nb);
  }
  if (resolved) *resolved = cfg;
  return out;
}

// V(s_i) = phi(|Z(s_i) - C(Z_i)| / (alpha + D(Z_i))) over the delta-window
// summaries.  A constant window scores 1 when the observation matches it and
// the smallest positive normal double otherwise; scores never reach 0 so they
// stay usable as regression weights.
inline VeracityScores score_all(const SpatialDataset& ds, const VeracityConfig& cfg_in) {
  VeracityScores vs;
  vs.scores.resize(ds.n());
  vs.neighbor_counts.resize(static_cast<std::size_t>(ds.n()));
  const auto nbrs = score_neighborhoods(ds, cfg_in, &vs.config, &vs.sparse_fallback);

  std::vector<double> window;
  for (std::size_t i = 0; i < nbrs.size(); ++i) {
    window.clear();
    for (std::size_t j : nbrs[i].member_indices) window.push_back(ds.values[static_cast<Eigen::Index>(j)]);
    vs.neighbor_counts[i] = static_cast<int>(window.size());
    const SummaryPair sum = summarize(window, vs.config.variant);
    const double dev = std::abs(ds.values[static_cast<Eigen::Index>(i)] - sum.center);
    const double denom = vs.config.alpha + sum.dispersion;
    double score;
    if (denom == 0.0)
      score = (dev == 0.0) ? 1.0 : std::numeric_limits<double>::min();
    else
      score = std::max(veracity_function(dev / denom), std::numeric_limits<double>::min());
    vs.scores[static_cast<Eigen::Index>(i)] = score;
  }
  return vs;
}

}  // namespace vsgeo

#endif
