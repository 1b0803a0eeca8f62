#include "ssmup/smc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ssmup/errors.hpp"
#include "ssmup/util.hpp"

namespace ssmup {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

std::vector<int> systematic_resample(std::span<const double> w, double u) {
  const int m = static_cast<int>(w.size());
  double total = 0.0;
  for (double x : w) total += x;
  if (std::abs(total - 1.0) > 1e-8) {
    throw UnnormalizedWeights("systematic_resample requires weights summing to 1");
  }
  std::vector<int> idx(static_cast<std::size_t>(m));
  double cum = w[0];
  int j = 0;
  for (int i = 0; i < m; ++i) {
    const double pos = (i + u) / m;
    // bins are [cum_{j-1}, cum_j): a position on the boundary belongs to the
    // next bin, so u = 0 with equal weights yields the identity permutation
    while (cum <= pos && j + 1 < m) {
      ++j;
      cum += w[j];
    }
    idx[static_cast<std::size_t>(i)] = j;
  }
  return idx;
}

double ess(std::span<const double> log_weights) {
  double mx = -kInf;
  for (double lw : log_weights) mx = std::max(mx, lw);
  if (mx == -kInf) throw AllZeroWeights("all particle weights are zero");
  double s = 0.0, s2 = 0.0;
  for (double lw : log_weights) {
    const double w = std::exp(lw - mx);
    s += w;
    s2 += w * w;
  }
  return s * s / s2;
}

LatentTrajectory FilterResult::trajectory(int i) const {
  LatentTrajectory traj;
  traj.state_dim = state_dim;
  traj.x.assign(static_cast<std::size_t>(steps()) * state_dim, 0.0);
  int idx = i;
  for (int s = steps() - 1; s >= 0; --s) {
    const double* src = step_states[s].data() + static_cast<std::size_t>(idx) * state_dim;
    std::copy(src, src + state_dim, traj.row(s).begin());
    idx = step_ancestors[s][static_cast<std::size_t>(idx)];
  }
  return traj;
}

LatentTrajectory FilterResult::sample_trajectory(RngStream& rng) const {
  const double u = rng.uniform();
  double cum = 0.0;
  int pick = particles - 1;
  for (int i = 0; i < particles; ++i) {
    cum += std::exp(final_ensemble.log_weights[static_cast<std::size_t>(i)]);
    if (u <= cum) {
      pick = i;
      break;
    }
  }
  return trajectory(pick);
}

FilterResult run_filter(const StateSpaceModel& model, std::span<const double> theta,
                        const Dataset& data, FilterKind kind, int particles, RngStream rng,
                        double resample_threshold, int t0,
                        std::optional<std::span<const double>> init_state) {
  if (particles < 1) throw InvalidParams("filter needs at least one particle");
  if (t0 < 0 || t0 > data.T()) throw LengthMismatch("filter start outside the dataset");
  if (t0 > 0 && !init_state) throw LengthMismatch("continuing a filter requires an init state");
  const int M = particles;
  const int d = model.state_dim;
  const int T = data.T();
  const bool use_proposal = static_cast<bool>(model.proposal_sample);
  if (kind == FilterKind::Auxiliary && !model.lookahead_logpdf) {
    throw InvalidParams("model provides no look-ahead density for the auxiliary filter");
  }

  FilterResult res;
  res.particles = M;
  res.state_dim = d;
  res.t0 = t0;
  res.T = T;
  res.step_states.reserve(static_cast<std::size_t>(T - t0));
  res.step_ancestors.reserve(static_cast<std::size_t>(T - t0));

  std::vector<double> prev(static_cast<std::size_t>(M) * d, 0.0);
  std::vector<double> lw(static_cast<std::size_t>(M), -std::log(static_cast<double>(M)));
  bool have_prev = false;
  if (init_state) {
    if (static_cast<int>(init_state->size()) != d) {
      throw LengthMismatch("init state has wrong dimension");
    }
    for (int i = 0; i < M; ++i) {
      std::copy(init_state->begin(), init_state->end(),
                prev.begin() + static_cast<std::size_t>(i) * d);
    }
    have_prev = true;
  }

  std::vector<double> cur(static_cast<std::size_t>(M) * d, 0.0);
  std::vector<double> incr(static_cast<std::size_t>(M), 0.0);
  std::vector<double> look(static_cast<std::size_t>(M), 0.0);
  std::vector<double> scratch(static_cast<std::size_t>(M), 0.0);
  std::vector<double> weights(static_cast<std::size_t>(M), 0.0);

  for (int s = t0; s < T; ++s) {
    const ObsView y = data.row(s);
    RngStream step_rng = rng.substream(static_cast<std::uint64_t>(s));
    RngStream resample_rng = step_rng.substream(0);
    RngStream prop_rng = step_rng.substream(1);

    std::vector<int> parents(static_cast<std::size_t>(M));
    std::iota(parents.begin(), parents.end(), 0);
    double stage_ll = 0.0;  // auxiliary first-stage contribution

    if (kind == FilterKind::Auxiliary && have_prev) {
      // Look-ahead stage: pre-weight by an estimate of p(y_s | x_{s-1}) and
      // resample every step on those first-stage weights.
      for (int i = 0; i < M; ++i) {
        const auto xp = std::span<const double>(prev.data() + static_cast<std::size_t>(i) * d,
                                                static_cast<std::size_t>(d));
        look[static_cast<std::size_t>(i)] = model.lookahead_logpdf(y, xp, theta, s);
        scratch[static_cast<std::size_t>(i)] = lw[static_cast<std::size_t>(i)] +
                                               look[static_cast<std::size_t>(i)];
      }
      stage_ll = logsumexp(scratch);
      if (stage_ll == -kInf) throw ParticleCollapse(s + 1);
      // renormalise linearly: log-space normalisation alone can be off by
      // ~|log w| * eps when log weights are huge in magnitude
      double total = 0.0;
      for (int i = 0; i < M; ++i) {
        weights[static_cast<std::size_t>(i)] =
            std::exp(scratch[static_cast<std::size_t>(i)] - stage_ll);
        total += weights[static_cast<std::size_t>(i)];
      }
      for (auto& w : weights) w /= total;
      parents = systematic_resample(weights, resample_rng.uniform());
      std::fill(lw.begin(), lw.end(), -std::log(static_cast<double>(M)));
    } else if (have_prev && s > t0) {
      // Bootstrap: adaptive resampling on the carried weights.
      if (ess(lw) < resample_threshold * M) {
        double total = 0.0;
        for (int i = 0; i < M; ++i) {
          weights[static_cast<std::size_t>(i)] = std::exp(lw[static_cast<std::size_t>(i)]);
          total += weights[static_cast<std::size_t>(i)];
        }
        for (auto& w : weights) w /= total;
        parents = systematic_resample(weights, resample_rng.uniform());
        std::fill(lw.begin(), lw.end(), -std::log(static_cast<double>(M)));
      }
    }

    // Propagate and weight.
    for (int i = 0; i < M; ++i) {
      RngStream prng = prop_rng.substream(static_cast<std::uint64_t>(i));
      const int a = parents[static_cast<std::size_t>(i)];
      const auto xp = have_prev
                          ? std::span<const double>(
                                prev.data() + static_cast<std::size_t>(a) * d,
                                static_cast<std::size_t>(d))
                          : std::span<const double>{};
      auto xi = std::span<double>(cur.data() + static_cast<std::size_t>(i) * d,
                                  static_cast<std::size_t>(d));
      double correction = 0.0;
      if (use_proposal) {
        model.proposal_sample(xp, y, theta, s, prng, xi);
        const double lp_target = (s == 0) ? model.init_logpdf(xi, theta)
                                          : model.trans_logpdf(xi, xp, theta, s);
        correction = lp_target - model.proposal_logpdf(xi, xp, y, theta, s);
      } else if (s == 0) {
        model.init_sample(theta, prng, xi);
      } else {
        model.trans_sample(xp, theta, s, prng, xi);
      }
      double g = y.all_missing() ? 0.0 : model.obs_logpdf(y, xi, theta, s);
      g += correction;
      if (kind == FilterKind::Auxiliary && have_prev) {
        g -= look[static_cast<std::size_t>(a)];
      }
      incr[static_cast<std::size_t>(i)] = g;
    }

    double step_ll;
    if (kind == FilterKind::Auxiliary && have_prev) {
      // Second stage corrects by actual/look-ahead density; lw are equal here.
      for (int i = 0; i < M; ++i) {
        scratch[static_cast<std::size_t>(i)] = incr[static_cast<std::size_t>(i)];
      }
      const double lse = logsumexp(scratch);
      if (lse == -kInf) throw ParticleCollapse(s + 1);
      step_ll = stage_ll + lse - std::log(static_cast<double>(M));
      for (int i = 0; i < M; ++i) {
        lw[static_cast<std::size_t>(i)] = scratch[static_cast<std::size_t>(i)] - lse;
      }
    } else {
      for (int i = 0; i < M; ++i) {
        scratch[static_cast<std::size_t>(i)] =
            lw[static_cast<std::size_t>(i)] + incr[static_cast<std::size_t>(i)];
      }
      step_ll = logsumexp(scratch);
      if (step_ll == -kInf) throw ParticleCollapse(s + 1);
      for (int i = 0; i < M; ++i) {
        lw[static_cast<std::size_t>(i)] = scratch[static_cast<std::size_t>(i)] - step_ll;
      }
    }
    res.loglik_hat += step_ll;

    res.step_states.push_back(cur);
    res.step_ancestors.push_back(parents);
    prev.swap(cur);
    have_prev = true;
  }

  res.final_ensemble.particles = M;
  res.final_ensemble.state_dim = d;
  res.final_ensemble.time = T;
  res.final_ensemble.states = prev;
  res.final_ensemble.log_weights = lw;
  res.final_ensemble.ancestors =
      res.step_ancestors.empty() ? std::vector<int>(static_cast<std::size_t>(M), 0)
                                 : res.step_ancestors.back();
  return res;
}

FilterResult bootstrap_filter(const StateSpaceModel& model, const ParamVector& theta,
                              const Dataset& data, int particles, std::uint64_t seed,
                              double resample_threshold) {
  const auto th = align_params(model.param_spec, theta);
  return run_filter(model, th, data, FilterKind::Bootstrap, particles, RngStream(seed),
                    resample_threshold);
}

FilterResult auxiliary_filter(const StateSpaceModel& model, const ParamVector& theta,
                              const Dataset& data, int particles, std::uint64_t seed,
                              double resample_threshold) {
  const auto th = align_params(model.param_spec, theta);
  return run_filter(model, th, data, FilterKind::Auxiliary, particles, RngStream(seed),
                    resample_threshold);
}

}  // namespace ssmup
