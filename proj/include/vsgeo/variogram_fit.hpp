#ifndef VSGEO_VARIOGRAM_FIT_HPP
#define VSGEO_VARIOGRAM_FIT_HPP

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "vsgeo/errors.hpp"
#include "vsgeo/nelder_mead.hpp"
#include "vsgeo/rng.hpp"
#include "vsgeo/variogram.hpp"

namespace vsgeo {

struct VariogramFitOptions {
  int nstarts = 10;
  std::uint64_t seed = 20240915;
  std::vector<double> nu_grid = {0.5, 1.0, 1.5, 2.5, 5.0};  // matern profile
  std::size_t min_pairs = 30;                               // bins kept for fitting
  // Box bounds; non-positive entries are filled from the data:
  // nugget, psill in [1e-8, 10 * max gamma_hat], range in [1e-3, 2 * max lag].
  double nugget_hi = 0.0;
  double psill_hi = 0.0;
  double range_hi = 0.0;
};

// Cressie's weighted least squares criterion
//   sum_j N(h_j) (gamma_hat_j / gamma(h_j; theta) - 1)^2.
inline double variogram_wls_objective(const VariogramModel& m, const EmpiricalVariogram& emp) {
  double obj = 0.0;
  for (std::size_t j = 0; j < emp.bin_centers.size(); ++j) {
    const double g = semivariance(m, emp.bin_centers[j]);
    if (!(g > 0.0)) return std::numeric_limits<double>::infinity();
    const double r = emp.gamma_hat[j] / g - 1.0;
    obj += static_cast<double>(emp.pair_counts[j]) * r * r;
  }
  return std::isfinite(obj) ? obj : std::numeric_limits<double>::infinity();
}

namespace detail {

inline EmpiricalVariogram filter_bins(const EmpiricalVariogram& emp, std::size_t min_pairs) {
  EmpiricalVariogram out;
  out.estimator = emp.estimator;
  for (std::size_t j = 0; j < emp.bin_centers.size(); ++j)
    if (emp.pair_counts[j] >= min_pairs) {
      out.bin_centers.push_back(emp.bin_centers[j]);
      out.gamma_hat.push_back(emp.gamma_hat[j]);
      out.pair_counts.push_back(emp.pair_counts[j]);
    }
  return out;
}

}  // namespace detail

// Fits (nugget, psill, range) by multi-start Nelder-Mead in log-parameters;
// the Matern smoothness is profiled over a fixed grid rather than optimized.
// Deterministic for a given options seed.
inline VariogramModel fit_variogram_wls(const EmpiricalVariogram& emp_in, VariogramFamily family,
                                        std::optional<VariogramModel> init = std::nullopt,
                                        const VariogramFitOptions& opt = {}) {
  const EmpiricalVariogram emp = detail::filter_bins(emp_in, opt.min_pairs);
  const std::size_t free_params = family == VariogramFamily::matern ? 4 : 3;
  if (emp.bin_centers.size() < free_params)
    throw EstimationError("variogram fit: " + std::to_string(emp.bin_centers.size()) +
                          " usable bins for " + std::to_string(free_params) + " parameters");

  double gmax = 0.0, hmax = 0.0;
  for (std::size_t j = 0; j < emp.bin_centers.size(); ++j) {
    gmax = std::max(gmax, emp.gamma_hat[j]);
    hmax = std::max(hmax, emp.bin_centers[j]);
  }
  if (!(gmax > 0.0)) {
    // Flat-zero variogram: pure-nugget degenerate data, return the floor.
    VariogramModel flat{family, 1e-8, 1e-8, std::max(hmax, 1e-3), family == VariogramFamily::matern ? 0.5 : 0.5};
    return flat;
  }
  const double lo_var = 1e-8;
  const double hi_nugget = opt.nugget_hi > 0.0 ? opt.nugget_hi : 10.0 * gmax;
  const double hi_psill = opt.psill_hi > 0.0 ? opt.psill_hi : 10.0 * gmax;
  const double hi_range = opt.range_hi > 0.0 ? opt.range_hi : 2.0 * hmax;

  Eigen::VectorXd lb(3), ub(3);
  lb << std::log(lo_var), std::log(lo_var), std::log(1e-3);
  ub << std::log(hi_nugget), std::log(hi_psill), std::log(hi_range);

  std::vector<double> nus =
      family == VariogramFamily::matern ? opt.nu_grid : std::vector<double>{0.5};
  if (nus.empty()) throw ParameterError("variogram fit: empty smoothness grid");

  RngStream rng(opt.seed);
  bool have_best = false;
  double best_obj = std::numeric_limits<double>::infinity();
  VariogramModel best{};
  for (std::size_t gi = 0; gi < nus.size(); ++gi) {
    const double nu = nus[gi];
    auto objective = [&](const Eigen::VectorXd& u) {
      VariogramModel m{family, std::exp(u[0]), std::exp(u[1]), std::exp(u[2]), nu};
      return variogram_wls_objective(m, emp);
    };
    std::vector<Eigen::VectorXd> starts;
    if (init) {
      Eigen::VectorXd u(3);
      u << std::log(std::clamp(init->nugget, lo_var, hi_nugget)),
          std::log(std::clamp(init->psill, lo_var, hi_psill)),
          std::log(std::clamp(init->range, 1e-3, hi_range));
      starts.push_back(u);
    }
    // A deterministic moment start plus seeded draws inside the box.
    Eigen::VectorXd u0(3);
    u0 << std::log(std::max(lo_var, 0.1 * gmax)), std::log(std::max(lo_var, 0.9 * gmax)),
        std::log(std::clamp(hmax / 3.0, 1e-3, hi_range));
    starts.push_back(u0);
    RngStream sub = rng.substream(gi);
    while (starts.size() < static_cast<std::size_t>(std::max(opt.nstarts, 1))) {
      Eigen::VectorXd u(3);
      for (int k = 0; k < 3; ++k) u[k] = sub.uniform(lb[k], ub[k]);
      starts.push_back(u);
    }
    for (const auto& s : starts) {
      const SimplexResult r = nelder_mead(objective, s, lb, ub);
      if (std::isfinite(r.value) && r.value < best_obj) {
        best_obj = r.value;
        best = VariogramModel{family, std::exp(r.x[0]), std::exp(r.x[1]), std::exp(r.x[2]), nu};
        have_best = true;
      }
    }
  }
  if (!have_best) throw FitError("variogram fit: no start produced a finite objective", best_obj);
  best.validate();
  return best;
}

}  // namespace vsgeo

#endif
