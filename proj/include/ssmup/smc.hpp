#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ssmup/ssm.hpp"

namespace ssmup {

struct ParticleEnsemble {
  int particles = 0;
  int state_dim = 1;
  int time = 0;  // 1-based time step the ensemble represents
  std::vector<double> states;       // M x state_dim
  std::vector<double> log_weights;  // normalised: logsumexp == 0
  std::vector<int> ancestors;       // parent index of each particle

  std::span<const double> row(int i) const {
    return {states.data() + static_cast<std::size_t>(i) * state_dim,
            static_cast<std::size_t>(state_dim)};
  }
};

enum class FilterKind { Bootstrap, Auxiliary };

struct FilterResult {
  double loglik_hat = 0.0;
  int particles = 0;
  int state_dim = 1;
  int t0 = 0;  // first 0-based step covered
  int T = 0;   // one past the last step
  // Per covered step: particle states (M x d) and the parent indices used to
  // propagate into that step.
  std::vector<std::vector<double>> step_states;
  std::vector<std::vector<int>> step_ancestors;
  ParticleEnsemble final_ensemble;

  int steps() const { return T - t0; }
  // Root-to-leaf path through the ancestor vectors ending at final particle i.
  LatentTrajectory trajectory(int i) const;
  // One path drawn proportional to the final normalised weights.
  LatentTrajectory sample_trajectory(RngStream& rng) const;
};

// Offspring counts satisfy |N_i - M w_i| < 1; deterministic given u in [0,1).
// Throws UnnormalizedWeights unless the weights sum to 1.
std::vector<int> systematic_resample(std::span<const double> normalized_weights, double u);

// (sum w)^2 / sum w^2 on exponentiated, max-stabilised log weights; in [1, M].
// Throws AllZeroWeights when every weight is -inf.
double ess(std::span<const double> log_weights);

// Runs the filter over steps [t0, T) of data. When init_state is given the
// ensemble starts as M copies of it (the replicated history of the updating
// algorithm) with equal weights; otherwise t0 must be 0 and particles are
// drawn from the initial distribution. loglik_hat accumulates
// sum_s log( sum_i W_{s-1,i} w_s^(i) ), the mean-of-weights convention.
// Throws ParticleCollapse (with the 1-based offending step) when every
// particle weight vanishes.
FilterResult run_filter(const StateSpaceModel& model, std::span<const double> theta,
                        const Dataset& data, FilterKind kind, int particles, RngStream rng,
                        double resample_threshold = 0.5, int t0 = 0,
                        std::optional<std::span<const double>> init_state = std::nullopt);

// Convenience wrappers over the whole dataset from scratch.
FilterResult bootstrap_filter(const StateSpaceModel& model, const ParamVector& theta,
                              const Dataset& data, int particles, std::uint64_t seed,
                              double resample_threshold = 0.5);
FilterResult auxiliary_filter(const StateSpaceModel& model, const ParamVector& theta,
                              const Dataset& data, int particles, std::uint64_t seed,
                              double resample_threshold = 0.5);

}  // namespace ssmup
