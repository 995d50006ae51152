#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "vsgeo/regression.hpp"
#include "vsgeo/rng.hpp"
#include "vsgeo/simulation.hpp"

using namespace vsgeo;

namespace {

SpatialDataset make_dataset(const Eigen::MatrixXd& x, const Eigen::VectorXd& z) {
  SpatialDataset ds;
  ds.covariates = x;
  ds.values = z;
  for (Eigen::Index i = 0; i < z.size(); ++i)
    ds.locations.push_back({static_cast<double>(i % 17), static_cast<double>(i / 17)});
  ds.column_names.assign(static_cast<std::size_t>(x.cols()), "c");
  return ds;
}

// Oracle: explicit inverse of the weighted normal equations.
Eigen::VectorXd dense_inverse_solve(const Eigen::MatrixXd& x, const Eigen::VectorXd& z,
                                    const Eigen::VectorXd& w) {
  const Eigen::MatrixXd g = x.transpose() * w.asDiagonal() * x;
  return g.inverse() * (x.transpose() * w.asDiagonal() * z);
}

// Oracle: projected gradient descent on the weighted quadratic loss.
Eigen::VectorXd argmin_oracle(const Eigen::MatrixXd& x, const Eigen::VectorXd& z,
                              const Eigen::VectorXd& w) {
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(x.cols());
  const Eigen::MatrixXd g = x.transpose() * w.asDiagonal() * x;
  const Eigen::VectorXd b = x.transpose() * w.asDiagonal() * z;
  const double step = 1.0 / (g.operatorNorm() * 1.01);
  for (int it = 0; it < 200000; ++it) {
    const Eigen::VectorXd grad = g * beta - b;
    if (grad.cwiseAbs().maxCoeff() < 1e-12 * std::max(1.0, b.cwiseAbs().maxCoeff())) break;
    beta -= step * grad;
  }
  return beta;
}

}  // namespace

TEST_CASE("ols interpolates noiseless linear data") {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  Eigen::MatrixXd x(30, 3);
  for (Eigen::Index i = 0; i < 30; ++i) {
    x(i, 0) = 1.0;
    x(i, 1) = unif(gen);
    x(i, 2) = unif(gen);
  }
  Eigen::VectorXd beta0(3);
  beta0 << 2.0, -1.5, 0.25;
  const auto ds = make_dataset(x, x * beta0);
  const auto fit = fit_ols(ds);
  CHECK((fit.beta - beta0).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(fit.residuals.cwiseAbs().maxCoeff() < 1e-9);
  CHECK(fit.weights.isOnes());
}

TEST_CASE("intercept-only ols is the sample mean") {
  Eigen::VectorXd z(5);
  z << 1.0, 2.0, 3.0, 4.0, 10.0;
  const auto ds = make_dataset(Eigen::MatrixXd::Ones(5, 1), z);
  const auto fit = fit_ols(ds);
  CHECK(fit.beta[0] == Catch::Approx(z.mean()).epsilon(1e-14));
}

TEST_CASE("ols matches the dense-inverse oracle") {
  std::mt19937_64 gen(33);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::MatrixXd x(50, 3);
    Eigen::VectorXd z(50);
    for (Eigen::Index i = 0; i < 50; ++i) {
      x(i, 0) = 1.0;
      x(i, 1) = noise(gen);
      x(i, 2) = noise(gen);
      z[i] = noise(gen) * 3.0;
    }
    const auto ds = make_dataset(x, z);
    const auto fit = fit_ols(ds);
    const auto oracle = dense_inverse_solve(x, z, Eigen::VectorXd::Ones(50));
    REQUIRE((fit.beta - oracle).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("rank-deficient design raises a singularity error") {
  Eigen::MatrixXd x(10, 2);
  x.col(0).setOnes();
  x.col(1).setOnes();  // duplicated column
  const auto ds = make_dataset(x, Eigen::VectorXd::Ones(10));
  CHECK_THROWS_AS(fit_ols(ds), SingularityError);
}

TEST_CASE("unit weights reproduce ols exactly") {
  std::mt19937_64 gen(7);
  std::normal_distribution<double> noise(0.0, 1.0);
  Eigen::MatrixXd x(40, 2);
  Eigen::VectorXd z(40);
  for (Eigen::Index i = 0; i < 40; ++i) {
    x(i, 0) = 1.0;
    x(i, 1) = noise(gen);
    z[i] = noise(gen);
  }
  const auto ds = make_dataset(x, z);
  CHECK(fit_ols(ds).beta == fit_weighted(ds, Eigen::VectorXd::Ones(40)).beta);
}

TEST_CASE("weight validation") {
  const auto ds = make_dataset(Eigen::MatrixXd::Ones(4, 1), Eigen::VectorXd::Ones(4));
  Eigen::VectorXd w = Eigen::VectorXd::Ones(4);
  w[2] = 0.0;
  CHECK_THROWS_AS(fit_weighted(ds, w), ParameterError);
  w[2] = 1.5;
  CHECK_THROWS_AS(fit_weighted(ds, w), ParameterError);
  CHECK_THROWS_AS(fit_weighted(ds, Eigen::VectorXd::Ones(3)), DimensionError);
}

TEST_CASE("near-indicator weights approximate the clean-subset ols") {
  std::mt19937_64 gen(55);
  std::normal_distribution<double> noise(0.0, 0.5);
  Eigen::MatrixXd x(60, 2);
  Eigen::VectorXd z(60);
  for (Eigen::Index i = 0; i < 60; ++i) {
    x(i, 0) = 1.0;
    x(i, 1) = noise(gen) * 4.0;
    z[i] = 3.0 + 0.5 * x(i, 1) + noise(gen);
  }
  // corrupt the last 10 and give them weight 1e-12
  Eigen::VectorXd w = Eigen::VectorXd::Ones(60);
  for (Eigen::Index i = 50; i < 60; ++i) {
    z[i] += 500.0;
    w[i] = 1e-12;
  }
  const auto ds = make_dataset(x, z);
  const auto fit = fit_weighted(ds, w);

  const auto clean = make_dataset(x.topRows(50), z.head(50));
  const auto clean_fit = fit_ols(clean);
  CHECK((fit.beta - clean_fit.beta).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("weighted closed form agrees with the argmin oracle") {
  std::mt19937_64 gen(202);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> wdist(0.05, 1.0);
  for (int rep = 0; rep < 100; ++rep) {
    const Eigen::Index n = 25 + static_cast<Eigen::Index>(gen() % 30);
    Eigen::MatrixXd x(n, 3);
    Eigen::VectorXd z(n), w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      x(i, 0) = 1.0;
      x(i, 1) = noise(gen);
      x(i, 2) = 0.3 * noise(gen) + 0.1;
      z[i] = noise(gen) * 2.0;
      w[i] = wdist(gen);
    }
    const auto ds = make_dataset(x, z);
    const auto fit = fit_weighted(ds, w);
    const auto oracle = argmin_oracle(x, z, w);
    REQUIRE((fit.beta - oracle).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("weighted normal equations hold at the fit") {
  std::mt19937_64 gen(88);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> wdist(1e-6, 1.0);
  for (int rep = 0; rep < 50; ++rep) {
    Eigen::MatrixXd x(45, 4);
    Eigen::VectorXd z(45), w(45);
    for (Eigen::Index i = 0; i < 45; ++i) {
      x(i, 0) = 1.0;
      for (int j = 1; j < 4; ++j) x(i, j) = noise(gen);
      z[i] = 5.0 * noise(gen);
      w[i] = wdist(gen);
    }
    const auto ds = make_dataset(x, z);
    const auto fit = fit_weighted(ds, w);
    const Eigen::VectorXd score = x.transpose() * w.asDiagonal() * fit.residuals;
    const double scale = (x.transpose() * w.asDiagonal() * z).norm();
    REQUIRE(score.norm() <= 1e-8 * std::max(scale, 1.0));
  }
}

TEST_CASE("permuting rows and weights leaves beta unchanged") {
  std::mt19937_64 gen(140);
  std::normal_distribution<double> noise(0.0, 1.0);
  Eigen::MatrixXd x(30, 2);
  Eigen::VectorXd z(30), w(30);
  for (Eigen::Index i = 0; i < 30; ++i) {
    x(i, 0) = 1.0;
    x(i, 1) = noise(gen);
    z[i] = noise(gen);
    w[i] = 0.2 + 0.8 * std::abs(noise(gen)) / 3.0;
    w[i] = std::min(w[i], 1.0);
  }
  auto ds = make_dataset(x, z);
  const auto base = fit_weighted(ds, w);

  std::vector<Eigen::Index> perm(30);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), gen);
  Eigen::MatrixXd xp(30, 2);
  Eigen::VectorXd zp(30), wp(30);
  for (Eigen::Index i = 0; i < 30; ++i) {
    xp.row(i) = x.row(perm[static_cast<std::size_t>(i)]);
    zp[i] = z[perm[static_cast<std::size_t>(i)]];
    wp[i] = w[perm[static_cast<std::size_t>(i)]];
  }
  const auto permuted = fit_weighted(make_dataset(xp, zp), wp);
  CHECK((base.beta - permuted.beta).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("egls with near-white covariance reduces to ols") {
  std::mt19937_64 gen(60);
  std::normal_distribution<double> noise(0.0, 1.0);
  Eigen::MatrixXd x(40, 2);
  Eigen::VectorXd z(40);
  for (Eigen::Index i = 0; i < 40; ++i) {
    x(i, 0) = 1.0;
    x(i, 1) = noise(gen);
    z[i] = 1.0 + x(i, 1) + noise(gen);
  }
  const auto ds = make_dataset(x, z);
  // tiny range: the covariance matrix is effectively psill * I
  VariogramModel white{VariogramFamily::exponential, 0.0, 2.0, 1e-8, 0.5};
  EglsOptions opt;
  opt.refit = false;
  const auto [fit, report] = fit_egls(ds, white, opt);
  CHECK(report.iterations == 1);
  CHECK((fit.beta - fit_ols(ds).beta).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("fixed-model egls equals the dense gls oracle") {
  FieldSpec spec;
  spec.n = 100;
  spec.seed = 42;
  const auto ds = simulate_field(spec);
  const VariogramModel model = spec.covariance;

  EglsOptions opt;
  opt.refit = false;
  const auto [fit, report] = fit_egls(ds, model, opt);

  const Eigen::MatrixXd sigma = covariance_matrix(model, ds.locations);
  const Eigen::MatrixXd si = sigma.inverse();
  const Eigen::VectorXd oracle =
      (ds.covariates.transpose() * si * ds.covariates).inverse() *
      (ds.covariates.transpose() * si * ds.values);
  CHECK((fit.beta - oracle).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("egls report converges on iterated refits") {
  FieldSpec spec;
  spec.n = 150;
  spec.seed = 77;
  const auto ds = simulate_field(spec);
  const auto ols = fit_ols(ds);
  const auto emp = empirical_variogram(ds.locations, ols.residuals, {},
                                       VariogramEstimator::cressie_hawkins);
  VariogramFitOptions vopt;
  vopt.min_pairs = 10;
  const auto init = fit_variogram_wls(emp, VariogramFamily::exponential, std::nullopt, vopt);
  EglsOptions opt;
  opt.fit = vopt;
  const auto [fit, report] = fit_egls(ds, init, opt);
  CHECK(report.iterations >= 1);
  CHECK(report.iterations <= opt.max_iter);
  CHECK(fit.residuals.size() == ds.n());
  if (report.converged) CHECK(report.beta_delta < opt.tol);
}
