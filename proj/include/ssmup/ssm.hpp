#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ssmup/dataset.hpp"
#include "ssmup/param.hpp"
#include "ssmup/rng.hpp"

namespace ssmup {

// Contract for a state-space model:
//   x_1 ~ init, x_t | x_{t-1} ~ trans (first-order Markov),
//   y_t | x_t ~ obs (conditionally independent given x_t).
// Callbacks receive theta in param_spec order and the 0-based time index, so
// year-varying covariates are supported without global state. All callbacks
// must be re-entrant; engines evaluate them concurrently across particles
// and chains.
struct StateSpaceModel {
  std::string id;
  int state_dim = 1;
  int obs_dim = 1;
  std::vector<ParamSpecEntry> param_spec;

  using Theta = std::span<const double>;

  std::function<void(Theta, RngStream&, std::span<double>)> init_sample;
  std::function<double(std::span<const double> x1, Theta)> init_logpdf;
  std::function<void(std::span<const double> x_prev, Theta, int t, RngStream&, std::span<double>)>
      trans_sample;
  std::function<double(std::span<const double> x_t, std::span<const double> x_prev, Theta, int t)>
      trans_logpdf;
  std::function<void(std::span<const double> x_t, Theta, int t, RngStream&, std::span<double>)>
      obs_sample;
  // Must skip missing entries of y_t.
  std::function<double(ObsView y_t, std::span<const double> x_t, Theta, int t)> obs_logpdf;

  // Optional data-informed particle proposal (occupancy: detected sites are
  // forced occupied). t == 0 proposes the initial state (x_prev empty).
  // Filters correct weights by trans - proposal, so the likelihood estimator
  // stays unbiased.
  std::function<void(std::span<const double> x_prev, ObsView y_t, Theta, int t, RngStream&,
                     std::span<double>)>
      proposal_sample;
  std::function<double(std::span<const double> x_t, std::span<const double> x_prev, ObsView y_t,
                       Theta, int t)>
      proposal_logpdf;

  // Optional one-step predictive density estimate p^(y_t | x_{t-1}) for the
  // auxiliary filter's look-ahead stage.
  std::function<double(ObsView y_t, std::span<const double> x_prev, Theta, int t)>
      lookahead_logpdf;

  // Optional data-informed starting points for MCMC chains (method-of-moments
  // style). The LGSSM likelihood is nearly symmetric under
  // (c, x) -> (-c, -x); latent-conditional samplers rarely cross between the
  // two sign modes, so chains are started in the positive-c mode: theta from
  // moment estimates with the positive sign convention and x ~ y.
  std::function<std::vector<double>(const Dataset&)> chain_init_theta;
  std::function<LatentTrajectory(const Dataset&)> chain_init_latents;

  // Optional per-component factorisation of the latent state, used by the
  // MCMC latent sweep when states are vectors of independent sites.
  struct ComponentOps {
    int components = 0;
    // t == 0 draws from the initial distribution (x_prev empty).
    std::function<double(int k, std::span<const double> x_prev, Theta, int t, RngStream&)> sample;
    std::function<double(int k, double value, std::span<const double> x_prev, Theta, int t)>
        logpdf;
    std::function<double(int k, double value, ObsView y_t, Theta, int t)> obs_logpdf;
    // Components pinned by the data (never updated); value() gives the pin.
    std::function<bool(int k, ObsView y_t, Theta, int t)> frozen;
    std::function<double(int k, ObsView y_t, Theta, int t)> frozen_value;
  };
  std::optional<ComponentOps> component_ops;

  // log p(theta): prior terms from param_spec, resolving hierarchical sds.
  double log_prior(Theta theta) const;
};

// Forward-simulates the model; deterministic under (theta, T, seed).
std::pair<LatentTrajectory, Dataset> simulate_dataset(const StateSpaceModel& model,
                                                      const ParamVector& theta, int T,
                                                      std::uint64_t seed);

// log p(x_1 | theta) + sum_t log p(x_t | x_{t-1}, theta)
//   + sum_t log p(y_t | x_t, theta), skipping missing y entries.
double joint_log_density(const StateSpaceModel& model, const LatentTrajectory& x,
                         const Dataset& y, const ParamVector& theta);

// Same with theta already in param_spec order (hot path).
double joint_log_density_canonical(const StateSpaceModel& model, const LatentTrajectory& x,
                                   const Dataset& y, std::span<const double> theta);

}  // namespace ssmup
