#pragma once

#include <cstdint>

#include "ssmup/ssm.hpp"

namespace ssmup {

// Linear Gaussian SSM with unit variances:
//   x_1 ~ N(a, 1), x_t ~ N(a x_{t-1}, 1), y_t ~ N(c x_t, 1).
// a and c carry Normal(0, 10) priors in block theta1.
struct LgssmConfig {
  double a = 0.5;
  double c = 1.0;
};

StateSpaceModel make_lgssm(const LgssmConfig& config = {});
ParamVector lgssm_theta(const LgssmConfig& config);

// Dynamic occupancy model:
//   z_{i,1} ~ Bern(psi_i),             logit(psi_i)   = alpha_psi + beta_psi * elevation_i
//   z_{i,t} ~ Bern(z phi + (1-z) gamma), logit(phi_it) = alpha_phi + beta_phi * springPrecip_it
//   y_{ijt} ~ Bern(z_{i,t} p_ijt),     logit(p_ijt)   = alpha_p + beta_p * windSpeed_ijt
// The latent state is the R-vector of a year; the observation is the R x J
// detection matrix flattened site-major.
struct OccupancyConfig {
  int sites = 50;
  int visits = 3;
  int years = 15;
  // theta1
  double alpha_p = 0.5;
  double beta_p = 0.3;
  double alpha_psi = 1.5;
  double beta_psi = 0.5;
  double alpha_phi = 2.0;
  double beta_phi = 0.3;
  double gamma = 0.1;
  // theta2 (prior sds of the detection/persistence effects)
  double sigma_alpha_p = 2.0;
  double sigma_beta_p = 3.0;
  double sigma_alpha_phi = 2.0;
  double sigma_beta_phi = 2.0;

  CovariateStore covariates;  // windSpeed [R,J,T], elevation [R], springPrecipitation [R,T]
};

// Throws ShapeMismatch when covariate shapes do not match (sites, visits).
StateSpaceModel make_occupancy(const OccupancyConfig& config);
ParamVector occupancy_theta(const OccupancyConfig& config);

// All three covariate arrays iid standard normal; deterministic under seed.
CovariateStore simulate_covariates(int sites, int visits, int years, std::uint64_t seed);

// Rebuilds a model from its archive id. Occupancy infers (R, J) from
// state_dim and obs_dim and takes covariates from the dataset.
StateSpaceModel build_model(const std::string& model_id, int state_dim, int obs_dim,
                            const CovariateStore& covariates);

}  // namespace ssmup
