#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "vsgeo/kriging.hpp"
#include "vsgeo/rng.hpp"
#include "vsgeo/simulation.hpp"

using namespace vsgeo;

namespace {

// Full bordered-system oracle: solve the (n+1)x(n+1) OK equations with a
// dense LU factorization, independently of the production path.
std::pair<double, double> ok_oracle(const std::vector<Location>& train, const Eigen::VectorXd& v,
                                    const VariogramModel& m, const Location& target) {
  const auto n = static_cast<Eigen::Index>(train.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n + 1, n + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    a(i, i) = m.sill();
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double dx = train[static_cast<std::size_t>(i)].x - train[static_cast<std::size_t>(j)].x;
      const double dy = train[static_cast<std::size_t>(i)].y - train[static_cast<std::size_t>(j)].y;
      a(i, j) = a(j, i) = covariance(m, std::hypot(dx, dy));
    }
    a(i, n) = a(n, i) = 1.0;
  }
  Eigen::VectorXd rhs(n + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double dx = train[static_cast<std::size_t>(i)].x - target.x;
    const double dy = train[static_cast<std::size_t>(i)].y - target.y;
    rhs[i] = covariance(m, std::hypot(dx, dy));
  }
  rhs[n] = 1.0;
  const Eigen::VectorXd sol = a.fullPivLu().solve(rhs);
  const double pred = sol.head(n).dot(v);
  const double var = m.sill() - sol.head(n).dot(rhs.head(n)) - sol[n];
  return {pred, var};
}

std::vector<Location> random_points(RngStream& rng, int n, double side) {
  std::vector<Location> pts;
  for (int i = 0; i < n; ++i) pts.push_back({rng.uniform(0.0, side), rng.uniform(0.0, side)});
  return pts;
}

}  // namespace

TEST_CASE("kriging interpolates exactly at training points without nugget") {
  RngStream rng(5);
  const auto pts = random_points(rng, 40, 8.0);
  Eigen::VectorXd vals(40);
  for (Eigen::Index i = 0; i < 40; ++i) vals[i] = rng.normal();
  VariogramModel m{VariogramFamily::exponential, 0.0, 2.0, 1.5, 0.5};
  OrdinaryKriging ok(pts, vals, m);
  for (std::size_t i : {0u, 7u, 39u}) {
    const auto p = ok.predict(pts[i]);
    CHECK(p.predicted == Catch::Approx(vals[static_cast<Eigen::Index>(i)]).margin(1e-8));
    CHECK(p.kriging_variance < 1e-8);
  }
  // away from the data the variance is strictly positive
  CHECK(ok.predict({3.33, 777.0}).kriging_variance > 0.5);
}

TEST_CASE("pure nugget collapses to the training mean") {
  RngStream rng(9);
  const auto pts = random_points(rng, 25, 5.0);
  Eigen::VectorXd vals(25);
  for (Eigen::Index i = 0; i < 25; ++i) vals[i] = rng.normal(3.0, 2.0);
  VariogramModel m{VariogramFamily::exponential, 1.5, 0.0, 1.0, 0.5};
  OrdinaryKriging ok(pts, vals, m);
  for (const auto& t : random_points(rng, 10, 5.0)) {
    const auto p = ok.predict(t);
    CHECK(p.predicted == Catch::Approx(vals.mean()).margin(1e-9));
  }
}

TEST_CASE("matches the dense bordered-system oracle") {
  FieldSpec spec;
  spec.n = 100;
  spec.seed = 31;
  const auto ds = simulate_field(spec);
  const Eigen::VectorXd resid = ds.values - ds.covariates * spec.beta;
  VariogramModel m{VariogramFamily::exponential, 0.05, 5.5, 1.2, 0.5};

  std::vector<Location> train(ds.locations.begin(), ds.locations.end() - 10);
  const Eigen::VectorXd train_vals = resid.head(90);
  OrdinaryKriging ok(train, train_vals, m);
  for (int t = 0; t < 10; ++t) {
    const Location target = ds.locations[static_cast<std::size_t>(90 + t)];
    const auto got = ok.predict(target);
    const auto [pred, var] = ok_oracle(train, train_vals, m, target);
    REQUIRE(got.predicted == Catch::Approx(pred).margin(1e-8));
    REQUIRE(got.kriging_variance == Catch::Approx(std::max(var, 0.0)).margin(1e-8));
  }
}

TEST_CASE("weights sum to one and margins match the variance") {
  RngStream rng(77);
  const auto pts = random_points(rng, 60, 10.0);
  Eigen::VectorXd vals(60);
  for (Eigen::Index i = 0; i < 60; ++i) vals[i] = rng.normal();
  VariogramModel m{VariogramFamily::matern, 0.1, 3.0, 2.0, 1.5};
  OrdinaryKriging ok(pts, vals, m);
  for (int t = 0; t < 30; ++t) {
    const Location target{rng.uniform(-2.0, 12.0), rng.uniform(-2.0, 12.0)};
    const auto sol = ok.solve(target);
    REQUIRE(std::abs(sol.weights.sum() - 1.0) < 1e-10);
    const auto pred = ok.predict(target);
    CHECK(pred.margin == Catch::Approx(kNormal975 * std::sqrt(pred.kriging_variance)));
  }
}

TEST_CASE("predictions are invariant to training order") {
  RngStream rng(13);
  auto pts = random_points(rng, 35, 6.0);
  Eigen::VectorXd vals(35);
  for (Eigen::Index i = 0; i < 35; ++i) vals[i] = rng.normal();
  VariogramModel m{VariogramFamily::exponential, 0.0, 1.0, 1.0, 0.5};
  const Location target{3.0, 3.0};
  const auto base = OrdinaryKriging(pts, vals, m).predict(target);

  std::vector<std::size_t> perm(35);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 gen(2);
  std::shuffle(perm.begin(), perm.end(), gen);
  std::vector<Location> pts2(35);
  Eigen::VectorXd vals2(35);
  for (std::size_t i = 0; i < 35; ++i) {
    pts2[i] = pts[perm[i]];
    vals2[static_cast<Eigen::Index>(i)] = vals[static_cast<Eigen::Index>(perm[i])];
  }
  const auto shuffled = OrdinaryKriging(pts2, vals2, m).predict(target);
  CHECK(shuffled.predicted == Catch::Approx(base.predicted).margin(1e-9));
  CHECK(shuffled.kriging_variance == Catch::Approx(base.kriging_variance).margin(1e-9));
}

TEST_CASE("extra training points never raise the nugget-free variance") {
  RngStream rng(3);
  for (int rep = 0; rep < 10; ++rep) {
    auto pts = random_points(rng, 30, 6.0);
    Eigen::VectorXd vals(30);
    for (Eigen::Index i = 0; i < 30; ++i) vals[i] = rng.normal();
    VariogramModel m{VariogramFamily::exponential, 0.0, 2.0, 2.0, 0.5};
    const Location target{rng.uniform(0.0, 6.0), rng.uniform(0.0, 6.0)};

    const auto var_small =
        OrdinaryKriging({pts.begin(), pts.begin() + 20}, vals.head(20), m).predict(target).kriging_variance;
    const auto var_full = OrdinaryKriging(pts, vals, m).predict(target).kriging_variance;
    const auto [pred_o, var_o] = ok_oracle(pts, vals, m, target);
    CHECK(var_full <= var_small + 1e-8);
    CHECK(var_full == Catch::Approx(std::max(var_o, 0.0)).margin(1e-8));
  }
}

TEST_CASE("duplicate training points without nugget raise a covariance error") {
  std::vector<Location> pts{{0.0, 0.0}, {0.0, 0.0}, {1.0, 1.0}};
  Eigen::VectorXd vals(3);
  vals << 1.0, 1.0, 2.0;
  VariogramModel m{VariogramFamily::exponential, 0.0, 1.0, 1.0, 0.5};
  CHECK_THROWS_MATCHES(OrdinaryKriging(pts, vals, m), CovarianceError,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("duplicate")));
}

TEST_CASE("kriging needs at least two training points") {
  std::vector<Location> pts{{0.0, 0.0}};
  Eigen::VectorXd vals(1);
  vals << 1.0;
  VariogramModel m{VariogramFamily::exponential, 0.0, 1.0, 1.0, 0.5};
  CHECK_THROWS_AS(OrdinaryKriging(pts, vals, m), DimensionError);
}

TEST_CASE("loocv contract on a tiny dataset") {
  SpatialDataset ds;
  ds.locations = {{0.0, 0.0}, {1.0, 0.0}};
  ds.values.resize(2);
  ds.values << 1.0, 2.0;
  ds.covariates = Eigen::MatrixXd::Ones(2, 1);
  ds.column_names = {"intercept"};
  PipelineConfig cfg;
  std::vector<Eigen::Index> test{0};
  CHECK_THROWS_AS(loocv(ds, cfg, test), DimensionError);
}

TEST_CASE("loocv runs the full pipeline on a simulated field") {
  FieldSpec spec;
  spec.n = 120;
  spec.seed = 404;
  const auto ds = simulate_field(spec);
  PipelineConfig cfg;
  cfg.family = VariogramFamily::exponential;
  cfg.fit.nstarts = 4;
  cfg.fit.min_pairs = 10;
  std::vector<Eigen::Index> test;
  for (Eigen::Index i = 0; i < 20; ++i) test.push_back(i * 6);
  const auto report = loocv(ds, cfg, test);
  CHECK(report.evaluated + report.failed == test.size());
  CHECK(report.evaluated >= 18);
  CHECK(report.mspe > 0.0);
  CHECK(report.coverage_95 >= 0.0);
  CHECK(report.coverage_95 <= 1.0);
  for (const auto& pt : report.per_point)
    if (pt.ok) CHECK(pt.error == Catch::Approx(pt.observed - pt.predicted));
}
