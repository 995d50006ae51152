#ifndef VSGEO_NELDER_MEAD_HPP
#define VSGEO_NELDER_MEAD_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <functional>
#include <vector>

#include "vsgeo/errors.hpp"

namespace vsgeo {

struct SimplexOptions {
  int max_iter = 2000;
  double x_tol = 1e-10;
  double f_tol = 1e-12;
  double initial_step = 0.1;  // fraction of the box width per coordinate
};

struct SimplexResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Nelder-Mead downhill simplex inside a box; trial points are clamped to the
// bounds.  Deterministic for a given start.
inline SimplexResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                                 const Eigen::VectorXd& x0, const Eigen::VectorXd& lb,
                                 const Eigen::VectorXd& ub, const SimplexOptions& opt = {}) {
  const auto d = x0.size();
  if (lb.size() != d || ub.size() != d) throw DimensionError("nelder_mead: bound size mismatch");
  auto clamp = [&](Eigen::VectorXd v) {
    for (Eigen::Index i = 0; i < d; ++i) v[i] = std::clamp(v[i], lb[i], ub[i]);
    return v;
  };

  std::vector<Eigen::VectorXd> xs;
  std::vector<double> fs;
  xs.push_back(clamp(x0));
  fs.push_back(f(xs[0]));
  for (Eigen::Index i = 0; i < d; ++i) {
    Eigen::VectorXd v = xs[0];
    const double step = opt.initial_step * (ub[i] - lb[i]);
    v[i] = (v[i] + step <= ub[i]) ? v[i] + step : v[i] - step;
    xs.push_back(clamp(v));
    fs.push_back(f(xs.back()));
  }
  const auto m = xs.size();

  auto order = [&] {
    std::vector<std::size_t> idx(m);
    for (std::size_t i = 0; i < m; ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return fs[a] < fs[b]; });
    std::vector<Eigen::VectorXd> xs2(m);
    std::vector<double> fs2(m);
    for (std::size_t i = 0; i < m; ++i) {
      xs2[i] = xs[idx[i]];
      fs2[i] = fs[idx[i]];
    }
    xs.swap(xs2);
    fs.swap(fs2);
  };

  SimplexResult res;
  int it = 0;
  for (; it < opt.max_iter; ++it) {
    order();
    double spread = 0.0;
    for (std::size_t i = 1; i < m; ++i)
      spread = std::max(spread, (xs[i] - xs[0]).cwiseAbs().maxCoeff());
    if (spread < opt.x_tol && std::abs(fs[m - 1] - fs[0]) < opt.f_tol) {
      res.converged = true;
      break;
    }

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(d);
    for (std::size_t i = 0; i + 1 < m; ++i) centroid += xs[i];
    centroid /= static_cast<double>(m - 1);

    const Eigen::VectorXd xr = clamp(centroid + (centroid - xs[m - 1]));
    const double fr = f(xr);
    if (fr < fs[0]) {
      const Eigen::VectorXd xe = clamp(centroid + 2.0 * (centroid - xs[m - 1]));
      const double fe = f(xe);
      if (fe < fr) {
        xs[m - 1] = xe;
        fs[m - 1] = fe;
      } else {
        xs[m - 1] = xr;
        fs[m - 1] = fr;
      }
    } else if (fr < fs[m - 2]) {
      xs[m - 1] = xr;
      fs[m - 1] = fr;
    } else {
      const Eigen::VectorXd xc = clamp(centroid + 0.5 * (xs[m - 1] - centroid));
      const double fc = f(xc);
      if (fc < fs[m - 1]) {
        xs[m - 1] = xc;
        fs[m - 1] = fc;
      } else {
        for (std::size_t i = 1; i < m; ++i) {
          xs[i] = clamp(xs[0] + 0.5 * (xs[i] - xs[0]));
          fs[i] = f(xs[i]);
        }
      }
    }
  }
  order();
  res.x = xs[0];
  res.value = fs[0];
  res.iterations = it;
  return res;
}

}  // namespace vsgeo

#endif
