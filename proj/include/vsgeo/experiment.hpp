#ifndef VSGEO_EXPERIMENT_HPP
#define VSGEO_EXPERIMENT_HPP

#include <Eigen/Dense>
#include <atomic>
#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "vsgeo/dataset.hpp"
#include "vsgeo/errors.hpp"
#include "vsgeo/kriging.hpp"
#include "vsgeo/regression.hpp"
#include "vsgeo/simulation.hpp"
#include "vsgeo/variogram_fit.hpp"
#include "vsgeo/veracity.hpp"

namespace vsgeo {

struct ExperimentCell {
  int n = 500;
  double sigma_A = 5.0;
  double alpha_M = 2.0;
  double q_e = 0.95;
};

struct ExperimentConfig {
  std::vector<ExperimentCell> cells;
  int replications = 100;
  std::uint64_t master_seed = 20240915;
  Eigen::VectorXd beta = (Eigen::VectorXd(4) << 70.0, 5.0, -2.0, -0.05).finished();
  VariogramModel covariance{VariogramFamily::exponential, 0.0, 6.0, 1.0, 0.5};
  VeracityConfig veracity;  // delta <= 0 resolves per dataset
  double smoothing_q = 1.0;
  BinSpec bins;
  VariogramEstimator estimator = VariogramEstimator::cressie_hawkins;
  VariogramFitOptions vfit;
  EglsOptions egls;
  bool run_mean_vs = true;
  bool run_ols = true;
  bool run_egls = true;
  bool run_covariance = true;
  int threads = 1;
};

// The one-factor-at-a-time grids tabulated in the study: sigma_A, then
// alpha_M, then q_e vary while the other two sit at the lowest-noise value.
// Both published q_e grids are available.
inline std::vector<ExperimentCell> preset_cells(const std::string& name, int n) {
  std::vector<ExperimentCell> cells;
  if (name == "sigma_a") {
    for (double sa : {5.0, 50.0, 100.0}) cells.push_back({n, sa, 2.0, 0.95});
  } else if (name == "alpha_m") {
    for (double am : {2.0, 0.5, 0.05}) cells.push_back({n, 5.0, am, 0.95});
  } else if (name == "qe_table") {
    for (double qe : {0.95, 0.9, 0.8}) cells.push_back({n, 5.0, 2.0, qe});
  } else if (name == "qe_text") {
    for (double qe : {0.95, 0.85, 0.75}) cells.push_back({n, 5.0, 2.0, qe});
  } else {
    throw ParameterError("experiment: unknown preset '" + name + "'");
  }
  return cells;
}

struct EstimatorSummary {
  double mse = 0.0;                 // mean ||beta_hat - beta||^2
  Eigen::VectorXd component_mse;    // per coefficient
  std::size_t replications = 0;
  std::size_t failures = 0;
};

struct CovarianceSummary {
  double psill_mse = 0.0;
  double range_mse = 0.0;
  std::size_t replications = 0;
  std::size_t failures = 0;
};

struct CellResult {
  ExperimentCell cell;
  std::map<std::string, EstimatorSummary> estimators;      // med_vs, mean_vs, ols, egls
  std::map<std::string, CovarianceSummary> covariances;    // vs, wls
  double re_med_vs_ols = 0.0;                               // MSE(ols) / MSE(med_vs)
  std::uint64_t good_set_seed = 0;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<CellResult> cells;
};

namespace detail {

inline std::uint64_t derive_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return mix64(mix64(mix64(a) ^ (b * 0x9E3779B97F4A7C15ull)) ^ (c * 0xC2B2AE3D27D4EB4Full));
}

struct RepRecord {
  // One slot per estimator; ok=false marks a recorded failure.
  struct Beta {
    Eigen::VectorXd err2;
    bool ok = false;
  };
  Beta med_vs, mean_vs, ols, egls;
  struct Cov {
    double psill_err2 = 0.0, range_err2 = 0.0;
    bool ok = false;
  };
  Cov vs_cov, wls_cov;
};

}  // namespace detail

// One replication of one cell.  Fields and noise draws are keyed by
// (master_seed, n, rep) only, so cells that differ in noise level share
// their random numbers and MSE ratios across cells are low-variance.
inline detail::RepRecord run_replication(const ExperimentConfig& cfg, const ExperimentCell& cell,
                                         int rep, std::uint64_t good_set_seed) {
  detail::RepRecord rec;
  const auto un = static_cast<std::uint64_t>(cell.n);
  FieldSpec field;
  field.n = cell.n;
  field.beta = cfg.beta;
  field.covariance = cfg.covariance;
  field.seed = detail::derive_seed(cfg.master_seed, un, 2ull * rep);
  const SpatialDataset clean = simulate_field(field);

  NoiseModel noise{cell.q_e, cell.alpha_M, cell.sigma_A, good_set_seed};
  const auto cont = contaminate(clean, noise, detail::derive_seed(cfg.master_seed, un, 2ull * rep + 1));
  const SpatialDataset& ds = cont.corrupted;

  auto beta_err2 = [&](const Eigen::VectorXd& beta_hat) {
    return Eigen::VectorXd((beta_hat - cfg.beta).array().square());
  };

  RegressionFit med_fit;
  bool have_med = false;
  try {
    VeracityConfig vc = cfg.veracity;
    vc.variant = SummaryVariant::median_iqr;
    const VeracityScores scores = score_all(ds, vc);
    med_fit = fit_weighted(ds, scores.scores);
    rec.med_vs.err2 = beta_err2(med_fit.beta);
    rec.med_vs.ok = true;
    have_med = true;
    if (cfg.run_covariance) {
      const Eigen::VectorXd smoothed =
          smooth_residuals(ds, med_fit.residuals, scores, {cfg.smoothing_q});
      const auto emp = empirical_variogram(ds.locations, smoothed, cfg.bins, cfg.estimator);
      const VariogramModel m = fit_variogram_wls(emp, cfg.covariance.family, std::nullopt, cfg.vfit);
      rec.vs_cov.psill_err2 = (m.psill - cfg.covariance.psill) * (m.psill - cfg.covariance.psill);
      rec.vs_cov.range_err2 = (m.range - cfg.covariance.range) * (m.range - cfg.covariance.range);
      rec.vs_cov.ok = true;
    }
  } catch (const Error&) {
    rec.med_vs.ok = have_med;
    rec.vs_cov.ok = false;
  }

  if (cfg.run_mean_vs) {
    try {
      VeracityConfig vc = cfg.veracity;
      vc.variant = SummaryVariant::mean_sd;
      rec.mean_vs.err2 = beta_err2(fit_weighted(ds, score_all(ds, vc).scores).beta);
      rec.mean_vs.ok = true;
    } catch (const Error&) {
    }
  }

  RegressionFit ols_fit;
  bool have_ols = false;
  VariogramModel wls_model;
  bool have_wls = false;
  if (cfg.run_ols || cfg.run_egls || cfg.run_covariance) {
    try {
      ols_fit = fit_ols(ds);
      have_ols = true;
      if (cfg.run_ols) {
        rec.ols.err2 = beta_err2(ols_fit.beta);
        rec.ols.ok = true;
      }
    } catch (const Error&) {
    }
  }
  if (have_ols && (cfg.run_covariance || cfg.run_egls)) {
    try {
      const auto emp = empirical_variogram(ds.locations, ols_fit.residuals, cfg.bins, cfg.estimator);
      wls_model = fit_variogram_wls(emp, cfg.covariance.family, std::nullopt, cfg.vfit);
      have_wls = true;
      if (cfg.run_covariance) {
        rec.wls_cov.psill_err2 =
            (wls_model.psill - cfg.covariance.psill) * (wls_model.psill - cfg.covariance.psill);
        rec.wls_cov.range_err2 =
            (wls_model.range - cfg.covariance.range) * (wls_model.range - cfg.covariance.range);
        rec.wls_cov.ok = true;
      }
    } catch (const Error&) {
    }
  }
  if (cfg.run_egls && have_wls) {
    try {
      EglsOptions eopt = cfg.egls;
      eopt.bins = cfg.bins;
      eopt.estimator = cfg.estimator;
      eopt.fit = cfg.vfit;
      rec.egls.err2 = beta_err2(fit_egls(ds, wls_model, eopt).first.beta);
      rec.egls.ok = true;
    } catch (const Error&) {
    }
  }
  return rec;
}

inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  if (cfg.cells.empty()) throw ParameterError("experiment: no cells configured");
  if (cfg.replications < 2) throw ParameterError("experiment: needs at least two replications");

  ExperimentResult result;
  result.config = cfg;
  for (const auto& cell : cfg.cells) {
    // The good set is shared by every replication of the cell and by cells
    // that only differ in noise magnitude.
    const std::uint64_t good_seed =
        detail::derive_seed(cfg.master_seed, static_cast<std::uint64_t>(cell.n), 0xFACEull);

    std::vector<detail::RepRecord> recs(static_cast<std::size_t>(cfg.replications));
    const int nthreads = std::max(1, cfg.threads);
    if (nthreads == 1) {
      for (int rep = 0; rep < cfg.replications; ++rep)
        recs[static_cast<std::size_t>(rep)] = run_replication(cfg, cell, rep, good_seed);
    } else {
      std::atomic<int> next{0};
      auto worker = [&] {
        for (;;) {
          const int rep = next.fetch_add(1);
          if (rep >= cfg.replications) return;
          recs[static_cast<std::size_t>(rep)] = run_replication(cfg, cell, rep, good_seed);
        }
      };
      std::vector<std::thread> pool;
      for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
      for (auto& t : pool) t.join();
    }

    CellResult cr;
    cr.cell = cell;
    cr.good_set_seed = good_seed;
    const auto p = cfg.beta.size();
    auto reduce_beta = [&](auto member) {
      EstimatorSummary s;
      s.component_mse = Eigen::VectorXd::Zero(p);
      for (const auto& rec : recs) {
        const auto& slot = rec.*member;
        if (!slot.ok) {
          ++s.failures;
          continue;
        }
        s.component_mse += slot.err2;
        ++s.replications;
      }
      if (s.replications > 0) {
        s.component_mse /= static_cast<double>(s.replications);
        s.mse = s.component_mse.sum();
      }
      return s;
    };
    cr.estimators["med_vs"] = reduce_beta(&detail::RepRecord::med_vs);
    if (cfg.run_mean_vs) cr.estimators["mean_vs"] = reduce_beta(&detail::RepRecord::mean_vs);
    if (cfg.run_ols) cr.estimators["ols"] = reduce_beta(&detail::RepRecord::ols);
    if (cfg.run_egls) cr.estimators["egls"] = reduce_beta(&detail::RepRecord::egls);
    auto reduce_cov = [&](auto member) {
      CovarianceSummary s;
      for (const auto& rec : recs) {
        const auto& slot = rec.*member;
        if (!slot.ok) {
          ++s.failures;
          continue;
        }
        s.psill_mse += slot.psill_err2;
        s.range_mse += slot.range_err2;
        ++s.replications;
      }
      if (s.replications > 0) {
        s.psill_mse /= static_cast<double>(s.replications);
        s.range_mse /= static_cast<double>(s.replications);
      }
      return s;
    };
    if (cfg.run_covariance) {
      cr.covariances["vs"] = reduce_cov(&detail::RepRecord::vs_cov);
      cr.covariances["wls"] = reduce_cov(&detail::RepRecord::wls_cov);
    }
    if (cfg.run_ols && cr.estimators["med_vs"].mse > 0.0)
      cr.re_med_vs_ols = cr.estimators["ols"].mse / cr.estimators["med_vs"].mse;
    result.cells.push_back(std::move(cr));
  }
  return result;
}

// Per-cell CSV mirroring the regression-MSE table layout.
inline void write_regression_table(const ExperimentResult& res, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("experiment: cannot write '" + path + "'");
  out << "n,sigma_A,alpha_M,q_e,mse_med_vs,mse_mean_vs,mse_ols,mse_egls,re_med_vs_ols,failures\n";
  for (const auto& cr : res.cells) {
    auto mse = [&](const std::string& k) {
      auto it = cr.estimators.find(k);
      return it == cr.estimators.end() ? std::numeric_limits<double>::quiet_NaN() : it->second.mse;
    };
    std::size_t failures = 0;
    for (const auto& [k, v] : cr.estimators) failures += v.failures;
    out << cr.cell.n << ',' << cr.cell.sigma_A << ',' << cr.cell.alpha_M << ',' << cr.cell.q_e
        << ',' << detail::format_double(mse("med_vs")) << ',' << detail::format_double(mse("mean_vs"))
        << ',' << detail::format_double(mse("ols")) << ',' << detail::format_double(mse("egls"))
        << ',' << detail::format_double(cr.re_med_vs_ols) << ',' << failures << '\n';
  }
}

inline void write_covariance_table(const ExperimentResult& res, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("experiment: cannot write '" + path + "'");
  out << "n,sigma_A,alpha_M,q_e,psill_mse_vs,psill_mse_wls,range_mse_vs,range_mse_wls,failures\n";
  for (const auto& cr : res.cells) {
    auto get = [&](const std::string& k) -> const CovarianceSummary* {
      auto it = cr.covariances.find(k);
      return it == cr.covariances.end() ? nullptr : &it->second;
    };
    const auto* vs = get("vs");
    const auto* wls = get("wls");
    const double nan = std::numeric_limits<double>::quiet_NaN();
    out << cr.cell.n << ',' << cr.cell.sigma_A << ',' << cr.cell.alpha_M << ',' << cr.cell.q_e
        << ',' << detail::format_double(vs ? vs->psill_mse : nan) << ','
        << detail::format_double(wls ? wls->psill_mse : nan) << ','
        << detail::format_double(vs ? vs->range_mse : nan) << ','
        << detail::format_double(wls ? wls->range_mse : nan) << ','
        << ((vs ? vs->failures : 0) + (wls ? wls->failures : 0)) << '\n';
  }
}

}  // namespace vsgeo

#endif
