#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ssmup/smc.hpp"
#include "ssmup/ssm.hpp"
#include "ssmup/util.hpp"

namespace ssmup {

struct McmcConfig {
  int iterations = 30000;
  int burn_in = 20000;
  int thin = 1;
  int chains = 1;
  double delta1 = 0.1;  // theta1 block step scale
  double delta2 = 0.1;  // theta2 block step scale
  Matrix sigma1;        // empty -> identity
  Matrix sigma2;
  std::uint64_t seed = 1;

  void validate(std::size_t n_params) const;
};

// Thinned post-burn-in draws of one chain.
struct Chain {
  std::vector<std::string> param_names;
  int kept = 0;
  int T = 0;
  int state_dim = 1;
  int chain_index = 0;
  std::vector<double> draws;         // kept x P
  std::vector<double> latent_draws;  // kept x T x state_dim
  std::map<std::string, double> acceptance;
  double wall_time = 0.0;

  std::span<const double> theta_row(int i) const {
    return {draws.data() + static_cast<std::size_t>(i) * param_names.size(),
            param_names.size()};
  }
};

// One random-walk Metropolis update of the given block: theta* = theta +
// delta * L z with L = chol(sigma), symmetric so no Hastings correction.
// Throws NonFiniteTarget when log_target(current) is not finite.
std::pair<ParamVector, bool> rw_block_step(
    const ParamVector& current, std::span<const int> block, double delta, const Matrix& sigma,
    const std::function<double(const ParamVector&)>& log_target, RngStream& rng);

// Random-walk Metropolis over the two parameter blocks alternating with
// single-site latent updates proposed from the transition prior.
Chain run_mcmc(const StateSpaceModel& model, const Dataset& data, const McmcConfig& config);

// config.chains independent chains with seed offsets seed + chain_index.
std::vector<Chain> run_mcmc_chains(const StateSpaceModel& model, const Dataset& data,
                                   const McmcConfig& config);

// Particle MCMC: block Metropolis on theta with the likelihood replaced by a
// particle-filter estimate; latents are ancestry-traced filter trajectories.
struct PmcmcOptions {
  FilterKind kind = FilterKind::Bootstrap;
  int particles = 1000;
  double resample_threshold = 0.5;
};

Chain run_pmcmc(const StateSpaceModel& model, const Dataset& data, const McmcConfig& config,
                const PmcmcOptions& options);
std::vector<Chain> run_pmcmc_chains(const StateSpaceModel& model, const Dataset& data,
                                    const McmcConfig& config, const PmcmcOptions& options);

}  // namespace ssmup
