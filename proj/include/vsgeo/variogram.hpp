#ifndef VSGEO_VARIOGRAM_HPP
#define VSGEO_VARIOGRAM_HPP

#include <Eigen/Dense>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "vsgeo/bessel.hpp"
#include "vsgeo/dataset.hpp"
#include "vsgeo/errors.hpp"
#include "vsgeo/robust_stats.hpp"
#include "vsgeo/veracity.hpp"

namespace vsgeo {

enum class VariogramFamily { exponential, matern };

enum class VariogramEstimator { matheron, cressie_hawkins };

struct VariogramModel {
  VariogramFamily family = VariogramFamily::exponential;
  double nugget = 0.0;
  double psill = 1.0;
  double range = 1.0;
  double smoothness = 0.5;  // Matern only

  double sill() const { return nugget + psill; }

  void validate() const {
    if (!(nugget >= 0.0)) throw ParameterError("variogram: nugget must be >= 0");
    if (!(psill >= 0.0)) throw ParameterError("variogram: psill must be >= 0");
    if (!(range > 0.0)) throw ParameterError("variogram: range must be > 0");
    if (family == VariogramFamily::matern && !(smoothness > 0.0))
      throw ParameterError("variogram: matern smoothness must be > 0");
  }
};

// Correlation at lag h; 1 at the origin, independent of nugget and sill.
inline double correlation(const VariogramModel& m, double h) {
  if (h <= 0.0) return 1.0;
  const double t = h / m.range;
  if (m.family == VariogramFamily::exponential) return std::exp(-t);
  if (t < 1e-10) return 1.0;
  const double nu = m.smoothness;
  const double log_pref = (1.0 - nu) * M_LN2 - std::lgamma(nu) + nu * std::log(t);
  const double k = bessel_k(nu, t);
  if (k <= 0.0) return 0.0;
  const double val = std::exp(log_pref + std::log(k));
  return std::min(val, 1.0);
}

// gamma(h) = C(0) - C(h); zero at the origin, nugget + psill in the limit.
inline double semivariance(const VariogramModel& m, double h) {
  if (!(h >= 0.0)) throw DomainError("semivariance: negative lag");
  if (h == 0.0) return 0.0;
  return m.nugget + m.psill * (1.0 - correlation(m, h));
}

// Covariance form used by the kriging and GLS systems.
inline double covariance(const VariogramModel& m, double h) {
  return m.sill() - semivariance(m, h);
}

inline Eigen::MatrixXd covariance_matrix(const VariogramModel& m, std::span<const Location> pts) {
  const auto n = static_cast<Eigen::Index>(pts.size());
  Eigen::MatrixXd c(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    c(i, i) = m.sill();
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double dx = pts[static_cast<std::size_t>(i)].x - pts[static_cast<std::size_t>(j)].x;
      const double dy = pts[static_cast<std::size_t>(i)].y - pts[static_cast<std::size_t>(j)].y;
      c(i, j) = c(j, i) = covariance(m, std::sqrt(dx * dx + dy * dy));
    }
  }
  return c;
}

struct EmpiricalVariogram {
  std::vector<double> bin_centers;
  std::vector<double> gamma_hat;
  std::vector<std::size_t> pair_counts;
  VariogramEstimator estimator = VariogramEstimator::cressie_hawkins;
};

struct BinSpec {
  int nbins = 15;
  double max_lag = 0.0;  // <= 0: half the maximum pairwise distance
};

// Binned semivariance estimates over all point pairs.  Matheron is the
// classical moment estimator, Cressie-Hawkins the fourth-root robust one;
// empty bins are dropped.
inline EmpiricalVariogram empirical_variogram(std::span<const Location> pts,
                                              const Eigen::VectorXd& residuals, const BinSpec& bins,
                                              VariogramEstimator estimator) {
  const std::size_t n = pts.size();
  if (n < 2) throw DimensionError("empirical variogram: needs at least two points");
  if (static_cast<std::size_t>(residuals.size()) != n)
    throw DimensionError("empirical variogram: residual length mismatch");
  if (bins.nbins < 1) throw ParameterError("empirical variogram: nbins must be >= 1");

  double max_lag = bins.max_lag;
  if (!(max_lag > 0.0)) {
    double dmax = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        const double dx = pts[i].x - pts[j].x, dy = pts[i].y - pts[j].y;
        dmax = std::max(dmax, dx * dx + dy * dy);
      }
    max_lag = 0.5 * std::sqrt(dmax);
    if (!(max_lag > 0.0)) throw EstimationError("empirical variogram: all locations coincide");
  }
  const double width = max_lag / bins.nbins;

  const auto nb = static_cast<std::size_t>(bins.nbins);
  std::vector<double> lag_sum(nb, 0.0), acc(nb, 0.0);
  std::vector<std::size_t> count(nb, 0);
  const bool robust = estimator == VariogramEstimator::cressie_hawkins;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = pts[i].x - pts[j].x, dy = pts[i].y - pts[j].y;
      const double d = std::sqrt(dx * dx + dy * dy);
      if (d <= 0.0 || d > max_lag) continue;
      auto b = static_cast<std::size_t>(d / width);
      if (b >= nb) b = nb - 1;
      const double diff = std::abs(residuals[static_cast<Eigen::Index>(i)] -
                                   residuals[static_cast<Eigen::Index>(j)]);
      acc[b] += robust ? std::sqrt(diff) : diff * diff;
      lag_sum[b] += d;
      ++count[b];
    }

  EmpiricalVariogram out;
  out.estimator = estimator;
  for (std::size_t b = 0; b < nb; ++b) {
    if (count[b] == 0) continue;
    const auto nc = static_cast<double>(count[b]);
    out.bin_centers.push_back(lag_sum[b] / nc);
    if (robust) {
      const double m = acc[b] / nc;
      out.gamma_hat.push_back(m * m * m * m / (2.0 * (0.457 + 0.494 / nc)));
    } else {
      out.gamma_hat.push_back(acc[b] / (2.0 * nc));
    }
    out.pair_counts.push_back(count[b]);
  }
  if (out.bin_centers.empty()) throw EstimationError("empirical variogram: no pairs in any bin");
  return out;
}

struct SmoothingConfig {
  double q = 1.0;
  // Neighborhoods are taken from the veracity config carried by the scores,
  // so smoothing always sees the same windows that produced the scores.
};

// VS-weighted shrink of each residual toward its local residual median:
//   e~_i = V_i^q e_i + (1 - V_i^q) Q2(e over the i-th window).
inline Eigen::VectorXd smooth_residuals(const SpatialDataset& ds, const Eigen::VectorXd& residuals,
                                        const VeracityScores& scores, const SmoothingConfig& cfg) {
  if (!(cfg.q >= 0.0)) throw ParameterError("smooth: q must be >= 0");
  if (residuals.size() != ds.n() || scores.scores.size() != ds.n())
    throw DimensionError("smooth: residual/score length mismatch");
  const auto nbrs = score_neighborhoods(ds, scores.config);
  Eigen::VectorXd out(ds.n());
  std::vector<double> window;
  for (std::size_t i = 0; i < nbrs.size(); ++i) {
    window.clear();
    for (std::size_t j : nbrs[i].member_indices)
      window.push_back(residuals[static_cast<Eigen::Index>(j)]);
    const double local_median = quantile(window, 0.5);
    const double vq = std::pow(scores.scores[static_cast<Eigen::Index>(i)], cfg.q);
    out[static_cast<Eigen::Index>(i)] =
        vq * residuals[static_cast<Eigen::Index>(i)] + (1.0 - vq) * local_median;
  }
  return out;
}

}  // namespace vsgeo

#endif
