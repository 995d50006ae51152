#ifndef VSGEO_REGRESSION_HPP
#define VSGEO_REGRESSION_HPP

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <string>

#include "vsgeo/dataset.hpp"
#include "vsgeo/errors.hpp"
#include "vsgeo/variogram.hpp"
#include "vsgeo/variogram_fit.hpp"

namespace vsgeo {

enum class RegressionMethod { ols, vs_wls, egls };

struct RegressionFit {
  Eigen::VectorXd beta;
  Eigen::VectorXd weights;    // all ones for ols/egls
  Eigen::VectorXd residuals;  // values - covariates * beta
  RegressionMethod method = RegressionMethod::ols;
  double gram_condition = 1.0;
};

struct SolveReport {
  int iterations = 0;
  bool converged = false;
  double beta_delta = 0.0;  // last sup-norm change
};

namespace detail {

// Eigen's LLT does not reliably flag exactly singular inputs, so inspect the
// factor diagonal as well.
inline bool llt_ok(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  if (llt.info() != Eigen::Success) return false;
  const auto d = llt.matrixLLT().diagonal();
  return d.allFinite() && d.minCoeff() > 0.0;
}

// Condition estimate from the Cholesky factor diagonal reported with
// singularity errors; cheap and adequate for p <= 10.
inline double llt_condition(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  const auto d = llt.matrixLLT().diagonal();
  const double lo = d.minCoeff(), hi = d.maxCoeff();
  if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
  return (hi / lo) * (hi / lo);
}

inline Eigen::LLT<Eigen::MatrixXd> factor_gram(const Eigen::MatrixXd& gram, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  const double cond = llt_condition(llt);
  if (!llt_ok(llt) || !(cond < 1e12))
    throw SingularityError(std::string(what) + ": singular or ill-conditioned system" +
                           " (condition ~ " + std::to_string(cond) + ")");
  return llt;
}

}  // namespace detail

// Weighted least squares with fixed positive weights in (0, 1]:
// beta = (X' D X)^{-1} X' D Z,  D = diag(weights).
inline RegressionFit fit_weighted(const SpatialDataset& ds, const Eigen::VectorXd& weights) {
  if (weights.size() != ds.n()) throw DimensionError("fit: weight length != n");
  for (Eigen::Index i = 0; i < weights.size(); ++i)
    if (!(weights[i] > 0.0) || !(weights[i] <= 1.0) || !std::isfinite(weights[i]))
      throw ParameterError("fit: weights must lie in (0, 1]");

  const Eigen::MatrixXd xw = ds.covariates.transpose() * weights.asDiagonal();
  const Eigen::MatrixXd gram = xw * ds.covariates;
  const auto llt = detail::factor_gram(gram, "weighted fit");

  RegressionFit fit;
  fit.method = RegressionMethod::vs_wls;
  fit.weights = weights;
  fit.beta = llt.solve(xw * ds.values);
  fit.residuals = ds.values - ds.covariates * fit.beta;
  fit.gram_condition = detail::llt_condition(llt);
  return fit;
}

inline RegressionFit fit_ols(const SpatialDataset& ds) {
  RegressionFit fit = fit_weighted(ds, Eigen::VectorXd::Ones(ds.n()));
  fit.method = RegressionMethod::ols;
  return fit;
}

struct EglsOptions {
  int max_iter = 20;
  double tol = 1e-6;
  bool refit = true;  // re-estimate the variogram from the running residuals
  BinSpec bins;
  VariogramEstimator estimator = VariogramEstimator::cressie_hawkins;
  VariogramFitOptions fit;
};

namespace detail {

inline Eigen::LLT<Eigen::MatrixXd> factor_covariance(Eigen::MatrixXd sigma, double sill,
                                                     const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt_ok(llt)) return llt;
  // One shot of diagonal jitter, then give up.
  sigma.diagonal().array() += 1e-10 * std::max(sill, 1.0);
  llt.compute(sigma);
  if (llt_ok(llt)) return llt;
  throw CovarianceError(std::string(what) + ": covariance matrix not positive definite");
}

}  // namespace detail

// Estimated GLS: alternate a full GLS solve under the current variogram with
// a variogram re-fit on the updated residuals, until beta stabilises.
inline std::pair<RegressionFit, SolveReport> fit_egls(const SpatialDataset& ds,
                                                      const VariogramModel& model,
                                                      const EglsOptions& opt = {}) {
  model.validate();
  if (opt.max_iter < 1) throw ParameterError("egls: max_iter must be >= 1");
  VariogramModel theta = model;
  Eigen::VectorXd beta_prev = fit_ols(ds).beta;

  RegressionFit fit;
  fit.method = RegressionMethod::egls;
  fit.weights = Eigen::VectorXd::Ones(ds.n());
  SolveReport report;
  for (int it = 1; it <= opt.max_iter; ++it) {
    report.iterations = it;
    const Eigen::MatrixXd sigma = covariance_matrix(theta, ds.locations);
    const auto llt = detail::factor_covariance(sigma, theta.sill(), "egls");
    const Eigen::MatrixXd siX = llt.solve(ds.covariates);
    const Eigen::VectorXd siZ = llt.solve(ds.values);
    const Eigen::MatrixXd gram = ds.covariates.transpose() * siX;
    const auto gram_llt = detail::factor_gram(gram, "egls");
    fit.beta = gram_llt.solve(ds.covariates.transpose() * siZ);
    fit.gram_condition = detail::llt_condition(gram_llt);
    fit.residuals = ds.values - ds.covariates * fit.beta;

    report.beta_delta = (fit.beta - beta_prev).cwiseAbs().maxCoeff();
    if (report.beta_delta < opt.tol) {
      report.converged = true;
      break;
    }
    beta_prev = fit.beta;
    if (!opt.refit) break;
    if (it == opt.max_iter) break;
    const EmpiricalVariogram emp =
        empirical_variogram(ds.locations, fit.residuals, opt.bins, opt.estimator);
    theta = fit_variogram_wls(emp, theta.family, theta, opt.fit);
  }
  return {fit, report};
}

}  // namespace vsgeo

#endif
