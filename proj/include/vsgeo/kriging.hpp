#ifndef VSGEO_KRIGING_HPP
#define VSGEO_KRIGING_HPP

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vsgeo/dataset.hpp"
#include "vsgeo/errors.hpp"
#include "vsgeo/regression.hpp"
#include "vsgeo/variogram.hpp"
#include "vsgeo/variogram_fit.hpp"
#include "vsgeo/veracity.hpp"

namespace vsgeo {

inline constexpr double kNormal975 = 1.959963984540054;

struct KrigingPrediction {
  Location location;
  double predicted = 0.0;
  double kriging_variance = 0.0;
  double margin = 0.0;  // kNormal975 * sqrt(kriging_variance)
};

// Factored ordinary-kriging system over one training set; solves any number
// of targets against a single Cholesky factorisation.  Covariance form with a
// Lagrange multiplier: C lambda + mu 1 = c0, sum lambda = 1.
class OrdinaryKriging {
 public:
  OrdinaryKriging(std::span<const Location> train, const Eigen::VectorXd& values,
                  const VariogramModel& model)
      : train_(train.begin(), train.end()), values_(values), model_(model) {
    model_.validate();
    const auto n = static_cast<Eigen::Index>(train_.size());
    if (n < 2) throw DimensionError("kriging: needs at least two training points");
    if (values_.size() != n) throw DimensionError("kriging: value length mismatch");

    // Coincident points with no nugget make the covariance matrix exactly
    // singular; report the geometry instead of factoring garbage.
    if (model_.nugget == 0.0) {
      for (std::size_t i = 0; i < train_.size(); ++i)
        for (std::size_t j = i + 1; j < train_.size(); ++j)
          if (train_[i].x == train_[j].x && train_[i].y == train_[j].y)
            throw CovarianceError("kriging: singular covariance matrix (duplicate training "
                                  "locations at indices " +
                                  std::to_string(i) + " and " + std::to_string(j) + ")");
    }
    Eigen::MatrixXd c = covariance_matrix(model_, train_);
    llt_.compute(c);
    if (!detail::llt_ok(llt_)) {
      c.diagonal().array() += 1e-10 * std::max(model_.sill(), 1.0);
      llt_.compute(c);
      if (!detail::llt_ok(llt_))
        throw CovarianceError("kriging: singular covariance matrix (" + degenerate_geometry() + ")");
    }
    ones_solved_ = llt_.solve(Eigen::VectorXd::Ones(n));
    ones_dot_ = ones_solved_.sum();
    if (!(ones_dot_ > 0.0))
      throw CovarianceError("kriging: degenerate unbiasedness constraint (" + degenerate_geometry() + ")");
  }

  struct Solution {
    Eigen::VectorXd weights;
    double multiplier = 0.0;
    double predicted = 0.0;
    double variance = 0.0;
  };

  Solution solve(const Location& target) const {
    const auto n = static_cast<Eigen::Index>(train_.size());
    Eigen::VectorXd c0(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double dx = train_[static_cast<std::size_t>(i)].x - target.x;
      const double dy = train_[static_cast<std::size_t>(i)].y - target.y;
      c0[i] = covariance(model_, std::sqrt(dx * dx + dy * dy));
    }
    const Eigen::VectorXd c0_solved = llt_.solve(c0);
    const double mu = (ones_solved_.dot(c0) - 1.0) / ones_dot_;
    Solution s;
    s.weights = c0_solved - mu * ones_solved_;
    s.multiplier = mu;
    s.predicted = s.weights.dot(values_);
    s.variance = std::max(model_.sill() - s.weights.dot(c0) - mu, 0.0);
    return s;
  }

  KrigingPrediction predict(const Location& target) const {
    const Solution s = solve(target);
    return {target, s.predicted, s.variance, kNormal975 * std::sqrt(s.variance)};
  }

 private:
  std::string degenerate_geometry() const {
    double dmin = std::numeric_limits<double>::infinity();
    std::size_t a = 0, b = 0;
    for (std::size_t i = 0; i < train_.size(); ++i)
      for (std::size_t j = i + 1; j < train_.size(); ++j) {
        const double dx = train_[i].x - train_[j].x, dy = train_[i].y - train_[j].y;
        const double d = std::sqrt(dx * dx + dy * dy);
        if (d < dmin) {
          dmin = d;
          a = i;
          b = j;
        }
      }
    if (dmin == 0.0)
      return "duplicate training locations at indices " + std::to_string(a) + " and " +
             std::to_string(b);
    return "minimum training separation " + std::to_string(dmin);
  }

  std::vector<Location> train_;
  Eigen::VectorXd values_;
  VariogramModel model_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::VectorXd ones_solved_;
  double ones_dot_ = 0.0;
};

inline std::vector<KrigingPrediction> krige(std::span<const Location> train,
                                            const Eigen::VectorXd& values,
                                            const VariogramModel& model,
                                            std::span<const Location> targets) {
  OrdinaryKriging ok(train, values, model);
  std::vector<KrigingPrediction> out;
  out.reserve(targets.size());
  for (const auto& t : targets) out.push_back(ok.predict(t));
  return out;
}

// Everything the VS pipeline needs to go from a raw dataset to kriged
// predictions; shared by the CLI and by cross-validation.
struct PipelineConfig {
  VeracityConfig veracity;
  SmoothingConfig smoothing;
  VariogramFamily family = VariogramFamily::matern;
  VariogramEstimator estimator = VariogramEstimator::cressie_hawkins;
  BinSpec bins;
  VariogramFitOptions fit;
  bool refit_trend_per_fold = true;  // false: keep the full-data beta in every fold
};

struct PipelineResult {
  VeracityScores scores;
  RegressionFit trend;
  Eigen::VectorXd smoothed;
  EmpiricalVariogram empirical;
  VariogramModel model;
};

inline PipelineResult run_vs_pipeline(const SpatialDataset& ds, const PipelineConfig& cfg,
                                      const Eigen::VectorXd* fixed_beta = nullptr) {
  PipelineResult out;
  out.scores = score_all(ds, cfg.veracity);
  if (fixed_beta) {
    out.trend.method = RegressionMethod::vs_wls;
    out.trend.beta = *fixed_beta;
    out.trend.weights = out.scores.scores;
    out.trend.residuals = ds.values - ds.covariates * (*fixed_beta);
  } else {
    out.trend = fit_weighted(ds, out.scores.scores);
  }
  out.smoothed = smooth_residuals(ds, out.trend.residuals, out.scores, cfg.smoothing);
  out.empirical = empirical_variogram(ds.locations, out.smoothed, cfg.bins, cfg.estimator);
  out.model = fit_variogram_wls(out.empirical, cfg.family, std::nullopt, cfg.fit);
  return out;
}

struct LoocvPoint {
  Eigen::Index index = 0;
  double observed = 0.0;
  double predicted = 0.0;
  double error = 0.0;
  double margin = 0.0;
  bool ok = false;
  std::string message;
};

struct LoocvReport {
  std::vector<LoocvPoint> per_point;
  double mspe = 0.0;
  double coverage_95 = 0.0;
  std::size_t evaluated = 0;
  std::size_t failed = 0;
};

// Leave-one-out over the requested test indices.  Each fold drops exactly one
// observation, reruns the whole VS pipeline on the remainder (scores included,
// so the held-out point never leaks into a neighborhood) and kriges the
// smoothed residual at the held-out location.
inline LoocvReport loocv(const SpatialDataset& ds, const PipelineConfig& cfg,
                         std::span<const Eigen::Index> test_indices) {
  if (ds.n() < 3) throw DimensionError("loocv: insufficient training data");
  std::optional<Eigen::VectorXd> global_beta;
  if (!cfg.refit_trend_per_fold) global_beta = fit_weighted(ds, score_all(ds, cfg.veracity).scores).beta;

  LoocvReport report;
  report.per_point.resize(test_indices.size());
  for (std::size_t t = 0; t < test_indices.size(); ++t) {
    const Eigen::Index test = test_indices[t];
    if (test < 0 || test >= ds.n()) throw DimensionError("loocv: test index out of range");
    LoocvPoint& pt = report.per_point[t];
    pt.index = test;
    pt.observed = ds.values[test];
    try {
      std::vector<Eigen::Index> keep;
      keep.reserve(static_cast<std::size_t>(ds.n()) - 1);
      for (Eigen::Index i = 0; i < ds.n(); ++i)
        if (i != test) keep.push_back(i);
      const SpatialDataset train = subset(ds, keep);
      const PipelineResult pipe =
          run_vs_pipeline(train, cfg, global_beta ? &*global_beta : nullptr);
      const OrdinaryKriging ok(train.locations, pipe.smoothed, pipe.model);
      const KrigingPrediction kp = ok.predict(ds.locations[static_cast<std::size_t>(test)]);
      pt.predicted = ds.covariates.row(test).dot(pipe.trend.beta) + kp.predicted;
      pt.error = pt.observed - pt.predicted;
      pt.margin = kp.margin;
      pt.ok = true;
    } catch (const Error& e) {
      pt.ok = false;
      pt.message = e.what();
    }
  }
  double sse = 0.0;
  std::size_t covered = 0;
  for (const auto& pt : report.per_point) {
    if (!pt.ok) {
      ++report.failed;
      continue;
    }
    ++report.evaluated;
    sse += pt.error * pt.error;
    if (std::abs(pt.error) <= pt.margin) ++covered;
  }
  if (report.evaluated > 0) {
    report.mspe = sse / static_cast<double>(report.evaluated);
    report.coverage_95 = static_cast<double>(covered) / static_cast<double>(report.evaluated);
  }
  return report;
}

}  // namespace vsgeo

#endif
