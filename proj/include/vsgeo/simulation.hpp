#ifndef VSGEO_SIMULATION_HPP
#define VSGEO_SIMULATION_HPP

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "vsgeo/dataset.hpp"
#include "vsgeo/errors.hpp"
#include "vsgeo/rng.hpp"
#include "vsgeo/variogram.hpp"

namespace vsgeo {

// One bump of the Gaussian-mixture trend surface.
struct SurfaceComponent {
  double weight = 1.0;
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  Eigen::Matrix2d cov = Eigen::Matrix2d::Identity();
};

// h(s) = H1 * sum_j w_j f(s; mu_j, Sigma_j) + H3 with f the bivariate normal
// density; H2 is the number of components.
struct SurfaceSpec {
  double H1 = 0.0;
  double H3 = 0.0;
  std::vector<SurfaceComponent> components;

  std::size_t H2() const { return components.size(); }
};

inline double mixture_surface(const SurfaceSpec& spec, const Location& s) {
  double acc = 0.0;
  const Eigen::Vector2d p(s.x, s.y);
  for (const auto& c : spec.components) {
    const double det = c.cov.determinant();
    if (!(det > 0.0) || c.cov(0, 1) != c.cov(1, 0))
      throw ParameterError("surface: component covariance must be symmetric positive definite");
    const Eigen::Vector2d d = p - c.mean;
    const double quad = d.dot(c.cov.inverse() * d);
    if (!(quad >= 0.0))
      throw ParameterError("surface: component covariance must be symmetric positive definite");
    acc += c.weight * std::exp(-0.5 * quad) / (2.0 * M_PI * std::sqrt(det));
  }
  return spec.H1 * acc + spec.H3;
}

// Domain side lambda_n = sqrt(n / 5): the sampling square grows with n at a
// constant average density of five points per unit area.
inline double default_domain_side(int n) { return std::sqrt(static_cast<double>(n) / 5.0); }

// Three equal-weight bumps spread over the domain with sd lambda/4 each.
// The amplitude scales with lambda^2 so the surface values (and with them the
// covariate magnitudes) do not shrink as the domain grows.
inline SurfaceSpec default_surface(double domain_side) {
  const double lam = domain_side;
  SurfaceSpec spec;
  spec.H1 = 6.0 * M_PI * lam * lam;
  spec.H3 = 0.0;
  const double sd = lam / 4.0;
  const Eigen::Matrix2d cov = Eigen::Matrix2d::Identity() * sd * sd;
  spec.components = {{1.0 / 3.0, {0.25 * lam, 0.25 * lam}, cov},
                     {1.0 / 3.0, {0.75 * lam, 0.50 * lam}, cov},
                     {1.0 / 3.0, {0.40 * lam, 0.80 * lam}, cov}};
  return spec;
}

struct FieldSpec {
  int n = 500;
  double domain_side = 0.0;  // <= 0: default_domain_side(n)
  Eigen::VectorXd beta = (Eigen::VectorXd(4) << 70.0, 5.0, -2.0, -0.05).finished();
  VariogramModel covariance{VariogramFamily::exponential, 0.0, 6.0, 1.0, 0.5};
  SurfaceSpec surface;  // empty components: default_surface(domain_side)
  std::uint64_t seed = 1;
};

// Y(s) = b0 + bx sx + by sy + bh h(s) + eps(s) over uniformly drawn locations,
// with eps from a seeded Gaussian field via dense Cholesky.  The same seed
// reproduces the dataset bit-for-bit.
inline SpatialDataset simulate_field(const FieldSpec& spec_in) {
  FieldSpec spec = spec_in;
  if (spec.n < 2) throw ParameterError("simulate: n must be >= 2");
  if (!(spec.domain_side > 0.0)) spec.domain_side = default_domain_side(spec.n);
  if (spec.surface.components.empty()) spec.surface = default_surface(spec.domain_side);
  if (spec.beta.size() != 4) throw ParameterError("simulate: beta must have four components");
  spec.covariance.validate();

  RngStream root(spec.seed);
  RngStream loc_stream = root.substream(0);
  RngStream field_stream = root.substream(1);

  SpatialDataset ds;
  const auto n = static_cast<Eigen::Index>(spec.n);
  ds.locations.reserve(static_cast<std::size_t>(spec.n));
  for (int i = 0; i < spec.n; ++i)
    ds.locations.push_back({loc_stream.uniform(0.0, spec.domain_side),
                            loc_stream.uniform(0.0, spec.domain_side)});

  ds.covariates.resize(n, 4);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Location& s = ds.locations[static_cast<std::size_t>(i)];
    ds.covariates(i, 0) = 1.0;
    ds.covariates(i, 1) = s.x;
    ds.covariates(i, 2) = s.y;
    ds.covariates(i, 3) = mixture_surface(spec.surface, s);
  }
  ds.column_names = {"intercept", "x", "y", "h"};
  ds.value_name = "z";

  Eigen::VectorXd eps = Eigen::VectorXd::Zero(n);
  if (spec.covariance.sill() > 0.0) {
    Eigen::MatrixXd sigma = covariance_matrix(spec.covariance, ds.locations);
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success) {
      sigma.diagonal().array() += 1e-10 * spec.covariance.sill();
      llt.compute(sigma);
      if (llt.info() != Eigen::Success)
        throw CovarianceError("simulate: covariance factorization failed");
    }
    Eigen::VectorXd white(n);
    for (Eigen::Index i = 0; i < n; ++i) white[i] = field_stream.normal();
    eps = llt.matrixL() * white;
  }
  ds.values = ds.covariates * spec.beta + eps;
  validate_dataset(ds);
  return ds;
}

// Additive-multiplicative contamination: outside the good set,
// Z = eps_M Y + eps_A with eps_M ~ 2 Beta(a_M, a_M) and eps_A ~ N(0, s_A^2).
struct NoiseModel {
  double q_e = 0.95;
  double alpha_M = 2.0;
  double sigma_A = 5.0;
  std::uint64_t good_set_seed = 97;

  double sigma_M() const { return std::sqrt(1.0 / (2.0 * alpha_M + 1.0)); }

  void validate() const {
    if (!(q_e > 0.0 && q_e <= 1.0)) throw ParameterError("noise: q_e must be in (0, 1]");
    if (!(alpha_M > 0.0)) throw ParameterError("noise: alpha_M must be > 0");
    if (!(sigma_A >= 0.0)) throw ParameterError("noise: sigma_A must be >= 0");
  }
};

// floor(q_e n) good indices drawn by a partial shuffle of the good-set stream;
// depends only on (n, q_e, good_set_seed), so replications can share it.
inline std::vector<bool> good_mask(int n, const NoiseModel& noise) {
  noise.validate();
  const auto k = static_cast<std::size_t>(std::floor(noise.q_e * n));
  std::vector<std::size_t> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  RngStream stream(noise.good_set_seed);
  for (std::size_t i = 0; i < k && i + 1 < idx.size(); ++i) {
    const auto j = i + static_cast<std::size_t>(stream.next_u64() % (idx.size() - i));
    std::swap(idx[i], idx[j]);
  }
  std::vector<bool> mask(static_cast<std::size_t>(n), false);
  for (std::size_t i = 0; i < k; ++i) mask[idx[i]] = true;
  return mask;
}

struct ContaminationResult {
  SpatialDataset corrupted;
  std::vector<bool> good;
};

inline ContaminationResult contaminate(const SpatialDataset& clean, const NoiseModel& noise,
                                       std::uint64_t draw_seed) {
  noise.validate();
  ContaminationResult out;
  out.corrupted = clean;
  out.good = good_mask(static_cast<int>(clean.n()), noise);
  RngStream stream(draw_seed);
  for (Eigen::Index i = 0; i < clean.n(); ++i) {
    if (out.good[static_cast<std::size_t>(i)]) continue;  // good rows stay bit-identical
    const double mult = 2.0 * stream.beta(noise.alpha_M, noise.alpha_M);
    const double add = stream.normal(0.0, noise.sigma_A);
    out.corrupted.values[i] = mult * clean.values[i] + add;
  }
  return out;
}

// tau^2 = (x'beta)^2 sigma_M^2 + sigma_eps^2 sigma_M^2 + sigma_A^2, the extra
// variance carried by a corrupted observation.
inline double noise_variance(double x_beta, double sigma_eps2, const NoiseModel& noise) {
  const double sm2 = 1.0 / (2.0 * noise.alpha_M + 1.0);
  return x_beta * x_beta * sm2 + sigma_eps2 * sm2 + noise.sigma_A * noise.sigma_A;
}

}  // namespace vsgeo

#endif
