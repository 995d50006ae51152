// vsgeo: veracity-scored robust geostatistics pipeline.
//
// Subcommands: score, fit, smooth, variogram, krige, crossval, simulate,
// experiment, bounds.  Options can come from a config file (--config,
// key=value with [subcommand] sections); command-line flags override it.
// Exit codes: 0 success, 1 user/config error, 2 numerical failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "vsgeo/dataset.hpp"
#include "vsgeo/errors.hpp"
#include "vsgeo/experiment.hpp"
#include "vsgeo/kriging.hpp"
#include "vsgeo/manifest.hpp"
#include "vsgeo/regression.hpp"
#include "vsgeo/simulation.hpp"
#include "vsgeo/theory.hpp"
#include "vsgeo/variogram.hpp"
#include "vsgeo/variogram_fit.hpp"
#include "vsgeo/veracity.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct StageLog {
  std::string stage;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  std::string extra;

  explicit StageLog(std::string name) : stage(std::move(name)) {}
  void add(const std::string& key, const std::string& value) { extra += " " + key + "=" + value; }
  void add(const std::string& key, double value) { extra += " " + key + "=" + std::to_string(value); }
  ~StageLog() {
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::steady_clock::now() - start)
                        .count();
    std::cerr << "stage=" << stage << " wall_ms=" << ms << extra << "\n";
  }
};

int default_threads() {
  if (const char* env = std::getenv("VSGEO_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 1;
}

vsgeo::DesignSpec parse_design(const std::string& text) {
  vsgeo::DesignSpec design;
  std::stringstream ss(text);
  std::string term;
  while (std::getline(ss, term, ',')) {
    if (term.empty()) continue;
    if (term == "intercept")
      design.terms.push_back(vsgeo::DesignTerm::Intercept());
    else if (term == "x")
      design.terms.push_back(vsgeo::DesignTerm::CoordX());
    else if (term == "y")
      design.terms.push_back(vsgeo::DesignTerm::CoordY());
    else
      design.terms.push_back(vsgeo::DesignTerm::Custom(term));
  }
  design.validate();
  return design;
}

vsgeo::SummaryVariant parse_variant(const std::string& v) {
  if (v == "median" || v == "median_iqr") return vsgeo::SummaryVariant::median_iqr;
  if (v == "mean" || v == "mean_sd") return vsgeo::SummaryVariant::mean_sd;
  throw vsgeo::ParameterError("unknown variant '" + v + "'");
}

vsgeo::VariogramFamily parse_family(const std::string& v) {
  if (v == "exponential" || v == "exp") return vsgeo::VariogramFamily::exponential;
  if (v == "matern") return vsgeo::VariogramFamily::matern;
  throw vsgeo::ParameterError("unknown variogram family '" + v + "'");
}

vsgeo::VariogramEstimator parse_estimator(const std::string& v) {
  if (v == "matheron") return vsgeo::VariogramEstimator::matheron;
  if (v == "cressie_hawkins" || v == "ch") return vsgeo::VariogramEstimator::cressie_hawkins;
  throw vsgeo::ParameterError("unknown estimator '" + v + "'");
}

json model_to_json(const vsgeo::VariogramModel& m) {
  json j;
  j["family"] = m.family == vsgeo::VariogramFamily::matern ? "matern" : "exponential";
  j["nugget"] = m.nugget;
  j["psill"] = m.psill;
  j["range"] = m.range;
  if (m.family == vsgeo::VariogramFamily::matern) j["smoothness"] = m.smoothness;
  return j;
}

// One manifest per output directory, naming every artifact the run wrote.
void write_manifest(const std::string& subcommand, const std::string& resolved_config,
                    std::uint64_t seed, const std::vector<std::string>& artifacts) {
  if (artifacts.empty()) return;
  vsgeo::RunManifest man;
  man.subcommand = subcommand;
  man.config_digest = vsgeo::content_digest(resolved_config);
  man.master_seed = seed;
  man.artifact_paths = artifacts;
  const fs::path dir = fs::path(artifacts.front()).parent_path();
  json j;
  j["subcommand"] = man.subcommand;
  j["config_digest"] = man.config_digest;
  j["master_seed"] = man.master_seed;
  j["artifact_paths"] = man.artifact_paths;
  j["tool_version"] = man.tool_version;
  j["resolved_config"] = resolved_config;
  std::ofstream out(dir / "manifest.json");
  if (!out) throw vsgeo::ParseError("cannot write manifest in '" + dir.string() + "'");
  out << j.dump(2) << "\n";
}

struct CommonIo {
  std::string input;
  std::string x_col = "x";
  std::string y_col = "y";
  std::string value_col = "z";
  std::string design_text = "intercept";

  void attach(CLI::App* app, bool with_design = true) {
    app->add_option("--input", input, "input CSV")->required();
    app->add_option("--x-col", x_col, "x column name");
    app->add_option("--y-col", y_col, "y column name");
    app->add_option("--value-col", value_col, "value column name");
    if (with_design)
      app->add_option("--design", design_text,
                      "covariate terms: intercept, x, y or custom column names");
  }

  vsgeo::SpatialDataset read() const {
    vsgeo::CsvSchema schema;
    schema.x_col = x_col;
    schema.y_col = y_col;
    schema.value_col = value_col;
    schema.design = parse_design(design_text);
    auto ds = vsgeo::read_csv(input, schema);
    if (const auto dups = vsgeo::duplicate_location_count(ds); dups > 0)
      std::cerr << "stage=read warn=duplicate_locations count=" << dups << "\n";
    return ds;
  }
};

struct VsFlags {
  double delta = 0.0;
  double alpha = 0.0;
  std::string variant = "median_iqr";
  int min_neighbors = 5;
  bool no_include_self = false;

  void attach(CLI::App* app) {
    app->add_option("--delta", delta, "neighborhood half-width (0: density default)");
    app->add_option("--alpha", alpha, "baseline deviation");
    app->add_option("--variant", variant, "median_iqr or mean_sd");
    app->add_option("--min-neighbors", min_neighbors, "sparse-window fallback threshold");
    app->add_flag("--no-include-self", no_include_self, "exclude the scored point from its window");
  }

  vsgeo::VeracityConfig config() const {
    vsgeo::VeracityConfig c;
    c.delta = delta;
    c.alpha = alpha;
    c.variant = parse_variant(variant);
    c.min_neighbors = min_neighbors;
    c.include_self = !no_include_self;
    return c;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"veracity-scored robust geostatistics"};
  app.set_config("--config", "", "key=value config file with [subcommand] sections");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);
  app.set_version_flag("--version", vsgeo::kToolVersion);

  // ---- score ----
  auto* score = app.add_subcommand("score", "veracity scores from local summaries");
  CommonIo score_io;
  score_io.attach(score, false);
  VsFlags score_vs;
  score_vs.attach(score);
  std::string score_output = "scored.csv";
  score->add_option("--output", score_output, "output CSV (input columns + vs)");

  // ---- fit ----
  auto* fit = app.add_subcommand("fit", "trend estimation: ols, vs or egls");
  CommonIo fit_io;
  fit_io.attach(fit);
  VsFlags fit_vs;
  fit_vs.attach(fit);
  std::string fit_method = "vs";
  std::string fit_output = "fit.json";
  std::string fit_resid = "";
  std::string fit_family = "exponential";
  int fit_nbins = 15;
  double fit_max_lag = 0.0;
  int fit_egls_max_iter = 20;
  double fit_egls_tol = 1e-6;
  fit->add_option("--method", fit_method, "ols, vs or egls");
  fit->add_option("--output", fit_output, "output JSON (beta and diagnostics)");
  fit->add_option("--residuals", fit_resid, "optional residual/weight CSV");
  fit->add_option("--family", fit_family, "egls variogram family");
  fit->add_option("--nbins", fit_nbins, "egls variogram bins");
  fit->add_option("--max-lag", fit_max_lag, "egls variogram max lag (0: half max distance)");
  fit->add_option("--egls-max-iter", fit_egls_max_iter, "egls outer iterations");
  fit->add_option("--egls-tol", fit_egls_tol, "egls sup-norm tolerance on beta");

  // ---- smooth ----
  auto* smooth = app.add_subcommand("smooth", "VS-based residual smoothing");
  CommonIo smooth_io;
  smooth_io.attach(smooth);
  VsFlags smooth_vs;
  smooth_vs.attach(smooth);
  double smooth_q = 1.0;
  std::string smooth_output = "smoothed.csv";
  smooth->add_option("--q", smooth_q, "smoothing exponent");
  smooth->add_option("--output", smooth_output, "output CSV with residual columns");

  // ---- variogram ----
  auto* vario = app.add_subcommand("variogram", "empirical variogram and WLS model fit");
  CommonIo vario_io;
  vario_io.attach(vario, false);
  std::string vario_estimator = "cressie_hawkins";
  std::string vario_family = "matern";
  int vario_nbins = 15;
  double vario_max_lag = 0.0;
  int vario_min_pairs = 30;
  std::string vario_output = "variogram.json";
  std::uint64_t vario_seed = 20240915;
  vario->add_option("--estimator", vario_estimator, "matheron or cressie_hawkins");
  vario->add_option("--family", vario_family, "exponential or matern");
  vario->add_option("--nbins", vario_nbins, "lag bins");
  vario->add_option("--max-lag", vario_max_lag, "max lag (0: half max distance)");
  vario->add_option("--min-pairs", vario_min_pairs, "minimum pairs per fitted bin");
  vario->add_option("--seed", vario_seed, "multi-start seed");
  vario->add_option("--output", vario_output, "output JSON");

  // ---- krige ----
  auto* krige = app.add_subcommand("krige", "ordinary kriging of a value column");
  CommonIo krige_io;
  krige_io.attach(krige, false);
  std::string krige_targets;
  std::string krige_output = "predictions.csv";
  std::string krige_family = "matern";
  double krige_nugget = 0.0, krige_psill = 1.0, krige_range = 1.0, krige_nu = 0.5;
  krige->add_option("--targets", krige_targets, "target CSV with x,y columns")->required();
  krige->add_option("--output", krige_output, "predictions CSV");
  krige->add_option("--family", krige_family, "exponential or matern");
  krige->add_option("--nugget", krige_nugget, "nugget");
  krige->add_option("--psill", krige_psill, "partial sill");
  krige->add_option("--range", krige_range, "range");
  krige->add_option("--nu", krige_nu, "matern smoothness");

  // ---- crossval ----
  auto* crossval = app.add_subcommand("crossval", "leave-one-out VS pipeline evaluation");
  CommonIo cv_io;
  cv_io.attach(crossval);
  VsFlags cv_vs;
  cv_vs.attach(crossval);
  double cv_q = 0.1;
  std::string cv_family = "matern";
  std::string cv_estimator = "cressie_hawkins";
  int cv_nbins = 15;
  double cv_max_lag = 0.0;
  int cv_min_pairs = 30;
  int cv_exclude_lowest = 0;
  bool cv_fixed_trend = false;
  std::uint64_t cv_seed = 20240915;
  std::string cv_output = "crossval.json";
  crossval->add_option("--q", cv_q, "smoothing exponent");
  crossval->add_option("--family", cv_family, "variogram family");
  crossval->add_option("--estimator", cv_estimator, "variogram estimator");
  crossval->add_option("--nbins", cv_nbins, "lag bins");
  crossval->add_option("--max-lag", cv_max_lag, "max lag (0: half max distance)");
  crossval->add_option("--min-pairs", cv_min_pairs, "minimum pairs per fitted bin");
  crossval->add_option("--exclude-lowest", cv_exclude_lowest,
                       "drop this many lowest-VS observations from the test set");
  crossval->add_flag("--fixed-trend", cv_fixed_trend, "reuse the full-data beta in every fold");
  crossval->add_option("--seed", cv_seed, "multi-start seed");
  crossval->add_option("--output", cv_output, "report JSON");

  // ---- simulate ----
  auto* simulate = app.add_subcommand("simulate", "Gaussian random field with trend surface");
  int sim_n = 500;
  std::uint64_t sim_seed = 1;
  double sim_domain = 0.0;
  double sim_nugget = 0.0, sim_psill = 6.0, sim_range = 1.0;
  std::vector<double> sim_beta = {70.0, 5.0, -2.0, -0.05};
  double sim_qe = 1.0, sim_alpha_m = 2.0, sim_sigma_a = 5.0;
  std::uint64_t sim_good_seed = 97, sim_noise_seed = 2;
  std::string sim_output = "field.csv";
  simulate->add_option("--n", sim_n, "points");
  simulate->add_option("--seed", sim_seed, "field seed");
  simulate->add_option("--domain-side", sim_domain, "square side (0: sqrt(n/5))");
  simulate->add_option("--nugget", sim_nugget, "nugget");
  simulate->add_option("--psill", sim_psill, "partial sill");
  simulate->add_option("--range", sim_range, "range");
  simulate->add_option("--beta", sim_beta, "trend coefficients b0 bx by bh")->expected(4);
  simulate->add_option("--qe", sim_qe, "clean fraction (1: no contamination)");
  simulate->add_option("--alpha-m", sim_alpha_m, "multiplicative Beta shape");
  simulate->add_option("--sigma-a", sim_sigma_a, "additive noise sd");
  simulate->add_option("--good-seed", sim_good_seed, "good-set seed");
  simulate->add_option("--noise-seed", sim_noise_seed, "noise draw seed");
  simulate->add_option("--output", sim_output, "output CSV");

  // ---- experiment ----
  auto* experiment = app.add_subcommand("experiment", "Monte Carlo estimator comparison");
  std::string exp_preset = "sigma_a";
  int exp_n = 500;
  int exp_reps = 100;
  std::uint64_t exp_seed = 20240915;
  int exp_threads = default_threads();
  std::string exp_outdir = "experiment_out";
  double exp_q = 1.0;
  bool exp_no_egls = false, exp_no_cov = false, exp_no_mean = false;
  std::vector<std::string> exp_cells;
  experiment->add_option("--preset", exp_preset, "sigma_a, alpha_m, qe_table or qe_text");
  experiment->add_option("--cell", exp_cells,
                         "explicit cell n:sigma_a:alpha_m:qe (repeatable, overrides --preset)");
  experiment->add_option("--n", exp_n, "points per replication");
  experiment->add_option("--reps", exp_reps, "replications per cell");
  experiment->add_option("--seed", exp_seed, "master seed");
  experiment->add_option("--threads", exp_threads, "worker threads (VSGEO_THREADS)");
  experiment->add_option("--out-dir", exp_outdir, "output directory");
  experiment->add_option("--q", exp_q, "smoothing exponent for the VS covariance pipeline");
  experiment->add_flag("--no-egls", exp_no_egls, "skip the EGLS estimator");
  experiment->add_flag("--no-covariance", exp_no_cov, "skip covariance-parameter fits");
  experiment->add_flag("--no-mean-vs", exp_no_mean, "skip the Mean-VS estimator");

  // ---- bounds ----
  auto* bounds = app.add_subcommand("bounds", "IQR bound constants and rate tables");
  double bounds_qe = 1.0;
  double bounds_sigma = 1.0;
  double bounds_psi = 0.0;
  bool bounds_rate_table = false;
  bounds->add_option("--qe", bounds_qe, "clean fraction");
  bounds->add_option("--sigma-eps", bounds_sigma, "residual scale");
  bounds->add_option("--psi", bounds_psi, "also print psi_eps(a) at this a (> 0)");
  bounds->add_flag("--rate-table", bounds_rate_table, "print the 9-row MSE order table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // usage problems exit 1, --help/--version exit 0
    return app.exit(e) == 0 ? 0 : 1;
  }
  const std::string resolved_config = app.config_to_str(true, false);

  try {
    if (*score) {
      StageLog log("score");
      const auto ds = score_io.read();
      const auto vs = vsgeo::score_all(ds, score_vs.config());
      vsgeo::write_csv(ds, vsgeo::DesignSpec::intercept_only(), {{"vs", vs.scores}}, score_output,
                       score_io.x_col, score_io.y_col);
      log.add("n", static_cast<double>(ds.n()));
      log.add("delta", vs.config.delta);
      log.add("mean_vs", vs.scores.mean());
      log.add("sparse_fallbacks",
              static_cast<double>(std::count(vs.sparse_fallback.begin(), vs.sparse_fallback.end(), true)));
      write_manifest("score", resolved_config, 0, {score_output});
    } else if (*fit) {
      StageLog log("fit");
      const auto ds = fit_io.read();
      vsgeo::RegressionFit rf;
      json extra;
      if (fit_method == "ols") {
        rf = vsgeo::fit_ols(ds);
      } else if (fit_method == "vs") {
        const auto vs = vsgeo::score_all(ds, fit_vs.config());
        rf = vsgeo::fit_weighted(ds, vs.scores);
        extra["delta"] = vs.config.delta;
      } else if (fit_method == "egls") {
        const auto ols = vsgeo::fit_ols(ds);
        const auto emp = vsgeo::empirical_variogram(
            ds.locations, ols.residuals, {fit_nbins, fit_max_lag},
            vsgeo::VariogramEstimator::cressie_hawkins);
        const auto init = vsgeo::fit_variogram_wls(emp, parse_family(fit_family));
        vsgeo::EglsOptions eopt;
        eopt.max_iter = fit_egls_max_iter;
        eopt.tol = fit_egls_tol;
        eopt.bins = {fit_nbins, fit_max_lag};
        auto [fit_res, report] = vsgeo::fit_egls(ds, init, eopt);
        rf = fit_res;
        extra["iterations"] = report.iterations;
        extra["converged"] = report.converged;
        extra["beta_delta"] = report.beta_delta;
      } else {
        throw vsgeo::ParameterError("fit: unknown method '" + fit_method + "'");
      }
      json j = extra;
      j["method"] = fit_method;
      j["beta"] = std::vector<double>(rf.beta.data(), rf.beta.data() + rf.beta.size());
      j["columns"] = ds.column_names;
      j["gram_condition"] = rf.gram_condition;
      std::ofstream out(fit_output);
      if (!out) throw vsgeo::ParseError("cannot write '" + fit_output + "'");
      out << j.dump(2) << "\n";
      std::vector<std::string> artifacts = {fit_output};
      if (!fit_resid.empty()) {
        vsgeo::write_csv(ds, vsgeo::DesignSpec::intercept_only(),
                         {{"weight", rf.weights}, {"residual", rf.residuals}}, fit_resid,
                         fit_io.x_col, fit_io.y_col);
        artifacts.push_back(fit_resid);
      }
      log.add("n", static_cast<double>(ds.n()));
      log.add("method", fit_method);
      write_manifest("fit", resolved_config, 0, artifacts);
    } else if (*smooth) {
      StageLog log("smooth");
      const auto ds = smooth_io.read();
      const auto vs = vsgeo::score_all(ds, smooth_vs.config());
      const auto rf = vsgeo::fit_weighted(ds, vs.scores);
      const auto smoothed = vsgeo::smooth_residuals(ds, rf.residuals, vs, {smooth_q});
      vsgeo::write_csv(ds, vsgeo::DesignSpec::intercept_only(),
                       {{"vs", vs.scores}, {"residual", rf.residuals}, {"residual_smooth", smoothed}},
                       smooth_output, smooth_io.x_col, smooth_io.y_col);
      log.add("n", static_cast<double>(ds.n()));
      log.add("q", smooth_q);
      write_manifest("smooth", resolved_config, 0, {smooth_output});
    } else if (*vario) {
      StageLog log("variogram");
      const auto ds = vario_io.read();
      const auto emp = vsgeo::empirical_variogram(ds.locations, ds.values,
                                                  {vario_nbins, vario_max_lag},
                                                  parse_estimator(vario_estimator));
      vsgeo::VariogramFitOptions opt;
      opt.seed = vario_seed;
      opt.min_pairs = static_cast<std::size_t>(vario_min_pairs);
      const auto model = vsgeo::fit_variogram_wls(emp, parse_family(vario_family), std::nullopt, opt);
      json j;
      j["bins"] = json::array();
      for (std::size_t b = 0; b < emp.bin_centers.size(); ++b)
        j["bins"].push_back({{"lag", emp.bin_centers[b]},
                             {"gamma", emp.gamma_hat[b]},
                             {"pairs", emp.pair_counts[b]}});
      j["estimator"] = vario_estimator;
      j["model"] = model_to_json(model);
      j["objective"] = vsgeo::variogram_wls_objective(model, emp);
      std::ofstream out(vario_output);
      if (!out) throw vsgeo::ParseError("cannot write '" + vario_output + "'");
      out << j.dump(2) << "\n";
      log.add("bins", static_cast<double>(emp.bin_centers.size()));
      log.add("range", model.range);
      write_manifest("variogram", resolved_config, vario_seed, {vario_output});
    } else if (*krige) {
      StageLog log("krige");
      const auto train = krige_io.read();
      vsgeo::CsvSchema tschema;
      tschema.x_col = krige_io.x_col;
      tschema.y_col = krige_io.y_col;
      tschema.value_col = krige_io.x_col;  // targets need coordinates only
      const auto targets = vsgeo::read_csv(krige_targets, tschema);
      vsgeo::VariogramModel model{parse_family(krige_family), krige_nugget, krige_psill,
                                  krige_range, krige_nu};
      const auto preds = vsgeo::krige(train.locations, train.values, model, targets.locations);
      std::ofstream out(krige_output);
      if (!out) throw vsgeo::ParseError("cannot write '" + krige_output + "'");
      out << "x,y,predicted,kriging_variance,margin\n";
      for (const auto& p : preds)
        out << vsgeo::detail::format_double(p.location.x) << ','
            << vsgeo::detail::format_double(p.location.y) << ','
            << vsgeo::detail::format_double(p.predicted) << ','
            << vsgeo::detail::format_double(p.kriging_variance) << ','
            << vsgeo::detail::format_double(p.margin) << '\n';
      out.close();
      log.add("n_train", static_cast<double>(train.n()));
      log.add("n_targets", static_cast<double>(preds.size()));
      write_manifest("krige", resolved_config, 0, {krige_output});
    } else if (*crossval) {
      StageLog log("crossval");
      const auto ds = cv_io.read();
      vsgeo::PipelineConfig pipe;
      pipe.veracity = cv_vs.config();
      pipe.smoothing.q = cv_q;
      pipe.family = parse_family(cv_family);
      pipe.estimator = parse_estimator(cv_estimator);
      pipe.bins = {cv_nbins, cv_max_lag};
      pipe.fit.min_pairs = static_cast<std::size_t>(cv_min_pairs);
      pipe.fit.seed = cv_seed;
      pipe.refit_trend_per_fold = !cv_fixed_trend;

      std::vector<Eigen::Index> test;
      if (cv_exclude_lowest > 0) {
        const auto vs = vsgeo::score_all(ds, pipe.veracity);
        std::vector<Eigen::Index> order(static_cast<std::size_t>(ds.n()));
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](auto a, auto b) { return vs.scores[a] < vs.scores[b]; });
        std::vector<bool> excluded(static_cast<std::size_t>(ds.n()), false);
        for (int k = 0; k < cv_exclude_lowest && k < ds.n(); ++k)
          excluded[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] = true;
        for (Eigen::Index i = 0; i < ds.n(); ++i)
          if (!excluded[static_cast<std::size_t>(i)]) test.push_back(i);
      } else {
        test.resize(static_cast<std::size_t>(ds.n()));
        std::iota(test.begin(), test.end(), 0);
      }
      const auto report = vsgeo::loocv(ds, pipe, test);
      json j;
      j["mspe"] = report.mspe;
      j["coverage_95"] = report.coverage_95;
      j["evaluated"] = report.evaluated;
      j["failed"] = report.failed;
      j["per_point"] = json::array();
      for (const auto& pt : report.per_point) {
        json p;
        p["index"] = pt.index;
        p["observed"] = pt.observed;
        p["predicted"] = pt.predicted;
        p["error"] = pt.error;
        p["margin"] = pt.margin;
        p["ok"] = pt.ok;
        if (!pt.ok) p["message"] = pt.message;
        j["per_point"].push_back(p);
      }
      std::ofstream out(cv_output);
      if (!out) throw vsgeo::ParseError("cannot write '" + cv_output + "'");
      out << j.dump(2) << "\n";
      log.add("tested", static_cast<double>(report.evaluated));
      log.add("mspe", report.mspe);
      log.add("coverage", report.coverage_95);
      write_manifest("crossval", resolved_config, cv_seed, {cv_output});
    } else if (*simulate) {
      StageLog log("simulate");
      vsgeo::FieldSpec field;
      field.n = sim_n;
      field.seed = sim_seed;
      field.domain_side = sim_domain;
      field.beta = Eigen::Map<Eigen::VectorXd>(sim_beta.data(), 4);
      field.covariance = {vsgeo::VariogramFamily::exponential, sim_nugget, sim_psill, sim_range, 0.5};
      auto clean = vsgeo::simulate_field(field);
      std::vector<std::pair<std::string, Eigen::VectorXd>> extras;
      vsgeo::DesignSpec out_design;
      out_design.terms = {vsgeo::DesignTerm::Intercept(), vsgeo::DesignTerm::CoordX(),
                          vsgeo::DesignTerm::CoordY(), vsgeo::DesignTerm::Custom("h")};
      vsgeo::SpatialDataset out_ds = clean;
      if (sim_qe < 1.0) {
        vsgeo::NoiseModel noise{sim_qe, sim_alpha_m, sim_sigma_a, sim_good_seed};
        auto cont = vsgeo::contaminate(clean, noise, sim_noise_seed);
        Eigen::VectorXd good(clean.n());
        for (Eigen::Index i = 0; i < clean.n(); ++i)
          good[i] = cont.good[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
        extras.emplace_back("y_clean", clean.values);
        extras.emplace_back("good", good);
        out_ds = cont.corrupted;
      }
      vsgeo::write_csv(out_ds, out_design, extras, sim_output);
      log.add("n", static_cast<double>(out_ds.n()));
      log.add("seed", static_cast<double>(sim_seed));
      write_manifest("simulate", resolved_config, sim_seed, {sim_output});
    } else if (*experiment) {
      StageLog log("experiment");
      vsgeo::ExperimentConfig cfg;
      if (exp_cells.empty()) {
        cfg.cells = vsgeo::preset_cells(exp_preset, exp_n);
      } else {
        for (const auto& text : exp_cells) {
          vsgeo::ExperimentCell cell;
          if (std::sscanf(text.c_str(), "%d:%lf:%lf:%lf", &cell.n, &cell.sigma_A, &cell.alpha_M,
                          &cell.q_e) != 4)
            throw vsgeo::ParameterError("experiment: --cell expects n:sigma_a:alpha_m:qe, got '" +
                                        text + "'");
          cfg.cells.push_back(cell);
        }
      }
      cfg.replications = exp_reps;
      cfg.master_seed = exp_seed;
      cfg.threads = exp_threads;
      cfg.smoothing_q = exp_q;
      cfg.run_egls = !exp_no_egls;
      cfg.run_covariance = !exp_no_cov;
      cfg.run_mean_vs = !exp_no_mean;
      const auto result = vsgeo::run_experiment(cfg);
      fs::create_directories(exp_outdir);
      const std::string reg_path = (fs::path(exp_outdir) / "regression_mse.csv").string();
      const std::string cov_path = (fs::path(exp_outdir) / "covariance_mse.csv").string();
      vsgeo::write_regression_table(result, reg_path);
      std::vector<std::string> artifacts = {reg_path};
      if (cfg.run_covariance) {
        vsgeo::write_covariance_table(result, cov_path);
        artifacts.push_back(cov_path);
      }
      json seeds;
      seeds["master_seed"] = cfg.master_seed;
      seeds["cells"] = json::array();
      for (const auto& cr : result.cells)
        seeds["cells"].push_back({{"n", cr.cell.n},
                                  {"sigma_A", cr.cell.sigma_A},
                                  {"alpha_M", cr.cell.alpha_M},
                                  {"q_e", cr.cell.q_e},
                                  {"good_set_seed", cr.good_set_seed},
                                  {"replications", cfg.replications}});
      const std::string seed_path = (fs::path(exp_outdir) / "seeds.json").string();
      std::ofstream out(seed_path);
      out << seeds.dump(2) << "\n";
      artifacts.push_back(seed_path);
      log.add("cells", static_cast<double>(result.cells.size()));
      write_manifest("experiment", resolved_config, exp_seed, artifacts);
    } else if (*bounds) {
      StageLog log("bounds");
      const auto b = vsgeo::theory_bounds_normal(bounds_qe, bounds_sigma);
      std::printf("C_l = %.4f\nC_u = %.4f\n", b.lower, b.upper);
      if (bounds_psi > 0.0) std::printf("psi_eps(%g) = %.8f\n", bounds_psi, vsgeo::psi_epsilon_normal(bounds_psi));
      if (bounds_rate_table) {
        std::printf("n,c,ols_lb,vs_ub,re_lb\n");
        for (int n : {100, 500, 1000})
          for (double c : {0.1, 0.5, 0.8}) {
            const auto row = vsgeo::rate_comparison_rounded(n, c);
            std::printf("%d,%.1f,%.3f,%.3f,%.3f\n", n, c, row.ols_lb, row.vs_ub, row.re_lb);
          }
      }
      log.add("qe", bounds_qe);
    }
  } catch (const vsgeo::NumericError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 2;
  } catch (const vsgeo::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
