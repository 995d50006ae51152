#ifndef VSGEO_THEORY_HPP
#define VSGEO_THEORY_HPP

#include <cmath>
#include <functional>
#include <limits>

#include "vsgeo/errors.hpp"
#include "vsgeo/normal.hpp"

namespace vsgeo {

struct IqrBounds {
  double lower = 0.0;  // C_eps^(l)(q_e)
  double upper = 0.0;  // C_eps^(u)(q_e)
};

// Bounds on the population IQR scaling of the Median-VS:
//   C^(l) = sigma (F^{-1}(max{1 - 0.25/q_e, 0}) - F^{-1}(min{0.25/q_e, 1}))
//   C^(u) = sigma (F^{-1}(min{0.75/q_e, 1}) - F^{-1}(max{1 - 0.75/q_e, 0})).
// The upper bound is finite only for q_e > 0.75; +inf is returned otherwise.
inline IqrBounds theory_bounds(double q_e, double sigma_eps,
                               const std::function<double(double)>& quantile) {
  if (!(q_e > 0.0 && q_e <= 1.0)) throw ParameterError("theory_bounds: q_e must be in (0, 1]");
  IqrBounds b;
  b.lower = sigma_eps * (quantile(std::max(1.0 - 0.25 / q_e, 0.0)) -
                         quantile(std::min(0.25 / q_e, 1.0)));
  b.upper = sigma_eps * (quantile(std::min(0.75 / q_e, 1.0)) -
                         quantile(std::max(1.0 - 0.75 / q_e, 0.0)));
  return b;
}

inline IqrBounds theory_bounds_normal(double q_e, double sigma_eps = 1.0) {
  return theory_bounds(q_e, sigma_eps, [](double p) { return normal_quantile(p); });
}

namespace detail {

inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double fa, double fm, double fb, double whole, double tol,
                               int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 48);
}

}  // namespace detail

// psi_eps(a) = integral_0^inf e^{-x} P(|eps| < a x) dx, evaluated on [0, 40]
// by adaptive Simpson; the truncated tail is below e^{-40}.
inline double psi_epsilon(double a, const std::function<double(double)>& abs_cdf) {
  if (!(a > 0.0)) throw DomainError("psi_epsilon: a must be > 0");
  auto f = [&](double x) { return std::exp(-x) * abs_cdf(a * x); };
  return detail::integrate(f, 0.0, 40.0, 1e-10);
}

inline double psi_epsilon_normal(double a) {
  return psi_epsilon(a, [](double t) { return std::erf(t * M_SQRT1_2); });
}

struct RateRow {
  double ols_lb = 0.0;  // order of the OLS MSE lower bound, n^(c-1)
  double vs_ub = 0.0;   // order of the VS MSE upper bound, n^(-1)
  double re_lb = 0.0;   // implied relative-efficiency lower bound, n^c
};

inline RateRow rate_comparison(int n, double c) {
  if (n < 1) throw ParameterError("rate_comparison: n must be >= 1");
  if (!(c > 0.0 && c < 1.0)) throw ParameterError("rate_comparison: c must be in (0, 1)");
  const double dn = static_cast<double>(n);
  return {std::pow(dn, c - 1.0), 1.0 / dn, std::pow(dn, c)};
}

// The three orders rounded to the printed three decimals.
inline RateRow rate_comparison_rounded(int n, double c) {
  auto r = rate_comparison(n, c);
  auto round3 = [](double v) { return std::round(v * 1000.0) / 1000.0; };
  return {round3(r.ols_lb), round3(r.vs_ub), round3(r.re_lb)};
}

}  // namespace vsgeo

#endif
