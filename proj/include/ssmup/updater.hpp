#pragma once

#include <cstdint>
#include <vector>

#include "ssmup/archive.hpp"
#include "ssmup/smc.hpp"
#include "ssmup/transform.hpp"

namespace ssmup {

struct UpdateConfig {
  int particles = 100;
  FilterKind filter = FilterKind::Bootstrap;
  double delta1 = 0.4;  // block step scales, < 0.5 by default
  double delta2 = 0.4;
  Matrix sigma1;  // empty -> identity
  Matrix sigma2;
  double resample_threshold = 0.5;
  int jobs = 1;
  std::uint64_t seed = 1;
};

// Output of one updating pass: row j holds either the accepted candidate
// theta*_j or the archived theta_r^(j), never a third value, plus one latent
// trajectory for the new steps drawn from the winning filter's final
// ensemble proportional to its weights.
struct UpdatedPosterior {
  std::vector<std::string> param_names;
  int N = 0;
  int new_steps = 0;
  int state_dim = 1;
  std::vector<double> theta_upd;    // N x P
  std::vector<double> latent_new;   // N x new_steps x state_dim
  std::vector<std::uint8_t> accept_flags;
  std::vector<double> loglik_candidate;  // new-step filter log likelihoods
  std::vector<double> loglik_reference;
  std::vector<std::uint8_t> collapsed;  // particle collapse on both runs
  double wall_time = 0.0;

  double accept_rate() const;
  std::span<const double> theta_row(int j) const {
    return {theta_upd.data() + static_cast<std::size_t>(j) * param_names.size(),
            param_names.size()};
  }
};

// History replication: for s = 1..t every particle equals the
// archived state x_s^(j) and the importance weight -- the cumulative
// observation log density of y_{1:s} along the archived trajectory -- is
// computed once and duplicated M times, so the ESS is M at every s <= t.
std::vector<ParticleEnsemble> replicate_history(const PosteriorArchive& archive,
                                                const StateSpaceModel& model, int row,
                                                int particles);

// Two-stage block proposal: theta2* ~ N(theta_r2, delta2^2 Sigma2) first,
// then theta1* ~ N(theta_r1, delta1^2 Sigma1). Both stages are centred on the
// archived draw and applied on the unconstrained scale, so the proposal is
// symmetric and the returned log Hastings ratio is 0.
struct TwoStageProposal {
  ParamVector theta_star;
  double log_hastings = 0.0;
};
TwoStageProposal propose_two_stage(const ParamVector& theta_r,
                                   const std::vector<ParamSpecEntry>& spec,
                                   const std::vector<ParamTransform>& transforms, double delta1,
                                   double delta2, const Matrix& sigma1, const Matrix& sigma2,
                                   RngStream& rng);

// min(1, exp(log p(theta*) - log p(theta_r) + log_hastings
//            + loglik_new_star - loglik_new_r)).
// Prior terms must include the transform Jacobians when proposals are made on
// the unconstrained scale. Throws BothCollapsed when both likelihoods are -inf.
double updated_mhar(double log_prior_star, double log_prior_r, double log_hastings,
                    double loglik_new_star, double loglik_new_r);

// The full updating pass over all archived draws: replicate the history,
// run the configured filter over the new steps under theta_r and theta*,
// accept with the updated acceptance ratio. Rows are independent and may be
// processed concurrently; per-row substreams keyed on the row content make
// the result independent of schedule and of archive row order.
UpdatedPosterior update_run(const PosteriorArchive& archive, const Dataset& new_data,
                            const StateSpaceModel& model, const UpdateConfig& config);

// Updated archive with t advanced past the new steps: theta.csv holds
// theta_upd and each latent row is the archived history followed by the new
// trajectory.
PosteriorArchive archive_from_update(const PosteriorArchive& base, const UpdatedPosterior& upd,
                                     const Dataset& new_data);

}  // namespace ssmup
