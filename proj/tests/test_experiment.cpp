#include <catch2/catch_amalgamated.hpp>

#include "vsgeo/experiment.hpp"

using namespace vsgeo;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.replications = 8;
  cfg.master_seed = 555;
  cfg.vfit.nstarts = 4;
  cfg.vfit.min_pairs = 10;
  cfg.egls.max_iter = 5;
  return cfg;
}

}  // namespace

TEST_CASE("experiment is reproducible and thread-count independent") {
  ExperimentConfig cfg = small_config();
  cfg.cells = {{150, 50.0, 2.0, 0.9}};
  cfg.threads = 1;
  const auto a = run_experiment(cfg);
  const auto b = run_experiment(cfg);
  cfg.threads = 4;
  const auto c = run_experiment(cfg);

  const auto& ea = a.cells[0].estimators;
  const auto& eb = b.cells[0].estimators;
  const auto& ec = c.cells[0].estimators;
  for (const auto& key : {"med_vs", "mean_vs", "ols", "egls"}) {
    REQUIRE(ea.at(key).mse == eb.at(key).mse);
    REQUIRE(ea.at(key).mse == ec.at(key).mse);
  }
  REQUIRE(a.cells[0].covariances.at("vs").psill_mse == c.cells[0].covariances.at("vs").psill_mse);
}

TEST_CASE("clean cell keeps all four estimators in the same band") {
  ExperimentConfig cfg = small_config();
  cfg.replications = 100;
  cfg.threads = 2;
  cfg.cells = {{200, 5.0, 2.0, 1.0}};  // q_e = 1: no contamination
  cfg.run_covariance = false;
  const auto res = run_experiment(cfg);
  std::vector<double> mses;
  for (const auto& key : {"med_vs", "mean_vs", "ols", "egls"})
    mses.push_back(res.cells[0].estimators.at(key).mse);
  const double lo = *std::min_element(mses.begin(), mses.end());
  const double hi = *std::max_element(mses.begin(), mses.end());
  CHECK(lo > 0.0);
  // no contamination: weights are near-flat and every estimator sits within
  // a factor two of the others
  CHECK(hi <= 2.0 * lo);
}

TEST_CASE("ols error shrinks with n on clean fields") {
  ExperimentConfig cfg = small_config();
  cfg.replications = 40;
  cfg.threads = 2;
  cfg.cells = {{200, 5.0, 2.0, 1.0}, {500, 5.0, 2.0, 1.0}, {1000, 5.0, 2.0, 1.0}};
  cfg.run_mean_vs = false;
  cfg.run_egls = false;
  cfg.run_covariance = false;
  const auto res = run_experiment(cfg);
  const double m200 = res.cells[0].estimators.at("ols").mse;
  const double m500 = res.cells[1].estimators.at("ols").mse;
  const double m1000 = res.cells[2].estimators.at("ols").mse;
  CHECK(m200 > m500);
  CHECK(m500 > m1000);
}

TEST_CASE("failures are counted, not silently dropped") {
  ExperimentConfig cfg = small_config();
  cfg.cells = {{150, 5.0, 2.0, 0.95}};
  const auto res = run_experiment(cfg);
  for (const auto& [key, summary] : res.cells[0].estimators) {
    INFO(key);
    CHECK(summary.replications + summary.failures ==
          static_cast<std::size_t>(cfg.replications));
  }
}

TEST_CASE("config validation") {
  ExperimentConfig cfg = small_config();
  CHECK_THROWS_AS(run_experiment(cfg), ParameterError);  // no cells
  cfg.cells = {{150, 5.0, 2.0, 0.95}};
  cfg.replications = 1;
  CHECK_THROWS_AS(run_experiment(cfg), ParameterError);
  CHECK_THROWS_AS(preset_cells("bogus", 100), ParameterError);
  CHECK(preset_cells("sigma_a", 500).size() == 3);
  CHECK(preset_cells("qe_text", 500)[2].q_e == 0.75);
}

TEST_CASE("relative efficiency is the MSE ratio") {
  ExperimentConfig cfg = small_config();
  cfg.cells = {{150, 100.0, 2.0, 0.9}};
  cfg.run_covariance = false;
  cfg.run_egls = false;
  const auto res = run_experiment(cfg);
  const auto& cell = res.cells[0];
  CHECK(cell.re_med_vs_ols ==
        Catch::Approx(cell.estimators.at("ols").mse / cell.estimators.at("med_vs").mse));
}
