#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "vsgeo/normal.hpp"
#include "vsgeo/theory.hpp"

using namespace vsgeo;

namespace {

// Bisection inverse of the erfc-based normal CDF, independent of the
// production quantile.
double normal_quantile_oracle(double p) {
  double lo = -10.0, hi = 10.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (normal_cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("normal quantile against the bisection oracle") {
  for (double p : {0.001, 0.01, 0.025, 0.25, 0.5, 0.75, 0.9, 0.975, 0.999}) {
    CHECK(normal_quantile(p) == Catch::Approx(normal_quantile_oracle(p)).margin(1e-10));
  }
  CHECK(normal_quantile(0.5) == Catch::Approx(0.0).margin(1e-15));
  CHECK(std::isinf(normal_quantile(0.0)));
  CHECK(std::isinf(normal_quantile(1.0)));
}

TEST_CASE("bounds at full cleanliness are the normal IQR") {
  const auto b = theory_bounds_normal(1.0, 1.0);
  const double iqr = normal_quantile_oracle(0.75) - normal_quantile_oracle(0.25);
  CHECK(b.lower == Catch::Approx(iqr).margin(1e-9));
  CHECK(b.upper == Catch::Approx(iqr).margin(1e-9));
  CHECK(b.lower == Catch::Approx(1.3489795003921634).margin(1e-10));
}

TEST_CASE("bounds collapse and diverge at the documented edges") {
  const auto half = theory_bounds_normal(0.5, 1.0);
  CHECK(half.lower == Catch::Approx(0.0).margin(1e-12));
  CHECK(std::isinf(half.upper));  // 0.75/q_e reaches 1 below q_e = 0.75

  CHECK_THROWS_AS(theory_bounds_normal(0.0, 1.0), ParameterError);
  CHECK_THROWS_AS(theory_bounds_normal(1.2, 1.0), ParameterError);
}

TEST_CASE("bounds are monotone in the clean fraction") {
  double prev_lower = -1.0;
  double prev_upper = std::numeric_limits<double>::infinity();
  for (double qe = 0.76; qe <= 1.0001; qe += 0.02) {
    const auto b = theory_bounds_normal(std::min(qe, 1.0), 1.0);
    CHECK(b.lower >= prev_lower - 1e-12);
    CHECK(b.upper <= prev_upper + 1e-12);
    prev_lower = b.lower;
    prev_upper = b.upper;
  }
}

TEST_CASE("bounds scale with sigma") {
  const auto unit = theory_bounds_normal(0.9, 1.0);
  const auto scaled = theory_bounds_normal(0.9, 2.5);
  CHECK(scaled.lower == Catch::Approx(2.5 * unit.lower).epsilon(1e-12));
  CHECK(scaled.upper == Catch::Approx(2.5 * unit.upper).epsilon(1e-12));
}

TEST_CASE("psi limits") {
  CHECK(psi_epsilon_normal(1e6) == Catch::Approx(1.0).margin(1e-5));
  CHECK(psi_epsilon_normal(1e-6) < 1e-5);
  CHECK_THROWS_AS(psi_epsilon_normal(0.0), DomainError);
  CHECK_THROWS_AS(psi_epsilon_normal(-1.0), DomainError);
}

TEST_CASE("psi against a brute-force Riemann sum") {
  auto abs_cdf = [](double t) { return std::erf(t * M_SQRT1_2); };
  const double a = 1.0;
  // midpoint rule at step 1e-5 on [0, 40]
  const double step = 1e-5;
  double acc = 0.0;
  for (double x = 0.5 * step; x < 40.0; x += step) acc += std::exp(-x) * abs_cdf(a * x) * step;
  CHECK(psi_epsilon_normal(a) == Catch::Approx(acc).margin(1e-7));
}

TEST_CASE("psi is increasing in a") {
  double prev = 0.0;
  for (double a : {0.1, 0.5, 1.0, 2.0, 10.0}) {
    const double v = psi_epsilon_normal(a);
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("rate table reproduces every printed row") {
  struct Row {
    int n;
    double c, ols_lb, vs_ub, re_lb;
  };
  const Row rows[] = {
      {100, 0.1, 0.016, 0.010, 1.585},   {100, 0.5, 0.100, 0.010, 10.000},
      {100, 0.8, 0.398, 0.010, 39.811},  {500, 0.1, 0.004, 0.002, 1.862},
      {500, 0.5, 0.045, 0.002, 22.361},  {500, 0.8, 0.289, 0.002, 144.270},
      {1000, 0.1, 0.002, 0.001, 1.995},  {1000, 0.5, 0.032, 0.001, 31.623},
      {1000, 0.8, 0.251, 0.001, 251.189}};
  for (const auto& r : rows) {
    const auto got = rate_comparison_rounded(r.n, r.c);
    CHECK(got.ols_lb == Catch::Approx(r.ols_lb).margin(1e-12));
    CHECK(got.vs_ub == Catch::Approx(r.vs_ub).margin(1e-12));
    CHECK(got.re_lb == Catch::Approx(r.re_lb).margin(1e-12));
  }
}

TEST_CASE("rate identity holds before rounding") {
  for (int n : {100, 500, 1000, 7777})
    for (double c : {0.1, 0.5, 0.8, 0.33}) {
      const auto r = rate_comparison(n, c);
      CHECK(r.re_lb == Catch::Approx(r.ols_lb / r.vs_ub).epsilon(1e-12));
    }
  CHECK_THROWS_AS(rate_comparison(0, 0.5), ParameterError);
  CHECK_THROWS_AS(rate_comparison(100, 1.5), ParameterError);
}
