#include <catch2/catch_amalgamated.hpp>

#include <gsl/gsl_sf_bessel.h>

#include <cmath>

#include "vsgeo/bessel.hpp"

using vsgeo::bessel_k;

TEST_CASE("half-integer orders match their closed forms") {
  auto k_half = [](double x) { return std::sqrt(M_PI / (2.0 * x)) * std::exp(-x); };
  for (double x : {0.05, 0.3, 1.0, 2.0, 3.7, 10.0, 30.0}) {
    CHECK(bessel_k(0.5, x) == Catch::Approx(k_half(x)).epsilon(1e-12));
    CHECK(bessel_k(1.5, x) == Catch::Approx(k_half(x) * (1.0 + 1.0 / x)).epsilon(1e-12));
    CHECK(bessel_k(2.5, x) ==
          Catch::Approx(k_half(x) * (1.0 + 3.0 / x + 3.0 / (x * x))).epsilon(1e-12));
  }
}

TEST_CASE("matches GSL over the working grid") {
  for (double nu = 0.1; nu <= 10.0; nu += 0.37) {
    for (double x = 0.01; x <= 50.0; x *= 1.9) {
      const double ours = bessel_k(nu, x);
      const double ref = gsl_sf_bessel_Knu(nu, x);
      REQUIRE(ours == Catch::Approx(ref).epsilon(1e-8));
    }
  }
}

TEST_CASE("integer orders agree with GSL too") {
  for (double nu : {0.0, 1.0, 2.0, 5.0}) {
    for (double x : {0.2, 1.0, 4.0, 17.0}) {
      CHECK(bessel_k(nu, x) == Catch::Approx(gsl_sf_bessel_Knu(nu + 1e-14, x)).epsilon(1e-8));
    }
  }
}

TEST_CASE("domain checks") {
  CHECK_THROWS_AS(bessel_k(1.0, 0.0), vsgeo::DomainError);
  CHECK_THROWS_AS(bessel_k(1.0, -1.0), vsgeo::DomainError);
  CHECK_THROWS_AS(bessel_k(-1.0, 1.0), vsgeo::DomainError);
}
