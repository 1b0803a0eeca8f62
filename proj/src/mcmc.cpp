#include "ssmup/mcmc.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "ssmup/errors.hpp"

namespace ssmup {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Proposes block entries in place; returns the displacement applied.
void propose_block(std::vector<double>& theta, std::span<const int> block, double delta,
                   const Matrix& chol, RngStream& rng, std::vector<double>& z) {
  const int n = static_cast<int>(block.size());
  z.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) z[static_cast<std::size_t>(i)] = rng.normal();
  for (int i = 0; i < n; ++i) {
    double step = 0.0;
    for (int j = 0; j <= i; ++j) step += chol(i, j) * z[static_cast<std::size_t>(j)];
    theta[static_cast<std::size_t>(block[static_cast<std::size_t>(i)])] += delta * step;
  }
}

Matrix block_chol(const Matrix& sigma, std::size_t block_size) {
  if (sigma.n == 0) return Matrix::identity(static_cast<int>(block_size));
  if (sigma.n != static_cast<int>(block_size)) {
    throw InvalidParams("proposal covariance does not match block size");
  }
  return sigma.cholesky();
}

std::vector<double> initial_theta(const StateSpaceModel& model, const Dataset& data) {
  if (model.chain_init_theta) {
    std::vector<double> th = model.chain_init_theta(data);
    if (th.size() == model.param_spec.size()) return th;
  }
  std::vector<double> th(model.param_spec.size());
  for (std::size_t i = 0; i < th.size(); ++i) th[i] = dist_mean(model.param_spec[i].prior);
  return th;
}

// Initial latent path; prefers the model's data-informed guess, then the
// constrained proposal, so hard observation constraints hold from the start.
LatentTrajectory initial_latents(const StateSpaceModel& model, const Dataset& data,
                                 std::span<const double> th, RngStream& rng) {
  if (model.chain_init_latents) return model.chain_init_latents(data);
  LatentTrajectory x;
  x.state_dim = model.state_dim;
  x.x.assign(static_cast<std::size_t>(data.T()) * model.state_dim, 0.0);
  for (int t = 0; t < data.T(); ++t) {
    const auto xp = t == 0 ? std::span<const double>{} : std::span<const double>(x.row(t - 1));
    if (model.proposal_sample) {
      model.proposal_sample(xp, data.row(t), th, t, rng, x.row(t));
    } else if (t == 0) {
      model.init_sample(th, rng, x.row(t));
    } else {
      model.trans_sample(xp, th, t, rng, x.row(t));
    }
  }
  return x;
}

struct SweepCounters {
  long long proposed = 0;
  long long accepted = 0;
};

// Single-site Metropolis pass over the latent path, proposing each update
// from the transition prior so the proposal terms cancel in the ratio.
void latent_sweep(const StateSpaceModel& model, const Dataset& data, std::span<const double> th,
                  LatentTrajectory& x, RngStream rng, SweepCounters& counters) {
  const int T = data.T();
  const bool por = model.component_ops.has_value();
  std::vector<double> prop(static_cast<std::size_t>(model.state_dim));
  for (int t = 0; t < T; ++t) {
    const ObsView y = data.row(t);
    const auto xp = t == 0 ? std::span<const double>{} : std::span<const double>(x.row(t - 1));
    RngStream trng = rng.substream(static_cast<std::uint64_t>(t));
    if (por) {
      const auto& ops = *model.component_ops;
      for (int k = 0; k < ops.components; ++k) {
        if (ops.frozen && ops.frozen(k, y, th, t)) continue;
        RngStream krng = trng.substream(static_cast<std::uint64_t>(k));
        const double old_v = x.row(t)[k];
        const double new_v = ops.sample(k, xp, th, t, krng);
        ++counters.proposed;
        if (new_v == old_v) {
          ++counters.accepted;
          continue;
        }
        double diff = ops.obs_logpdf(k, new_v, y, th, t) - ops.obs_logpdf(k, old_v, y, th, t);
        if (t + 1 < T) {
          const double next_v = x.row(t + 1)[k];
          x.row(t)[k] = new_v;
          const double lp_new = ops.logpdf(k, next_v, x.row(t), th, t + 1);
          x.row(t)[k] = old_v;
          const double lp_old = ops.logpdf(k, next_v, x.row(t), th, t + 1);
          diff += lp_new - lp_old;
        }
        if (diff >= 0.0 || std::log(krng.uniform()) < diff) {
          x.row(t)[k] = new_v;
          ++counters.accepted;
        }
      }
    } else {
      if (t == 0) {
        model.init_sample(th, trng, prop);
      } else {
        model.trans_sample(xp, th, t, trng, prop);
      }
      ++counters.proposed;
      double diff = 0.0;
      if (!y.all_missing()) {
        diff += model.obs_logpdf(y, prop, th, t) - model.obs_logpdf(y, x.row(t), th, t);
      }
      if (t + 1 < T) {
        diff += model.trans_logpdf(x.row(t + 1), prop, th, t + 1) -
                model.trans_logpdf(x.row(t + 1), x.row(t), th, t + 1);
      }
      if (diff >= 0.0 || std::log(trng.uniform()) < diff) {
        std::copy(prop.begin(), prop.end(), x.row(t).begin());
        ++counters.accepted;
      }
    }
  }
}

// Cached-target RW block step used inside chain loops.
bool rw_block_step_cached(std::vector<double>& theta, std::span<const int> block, double delta,
                          const Matrix& chol,
                          const std::function<double(std::span<const double>)>& log_target,
                          double& current_lp, RngStream& rng, std::vector<double>& z) {
  if (!std::isfinite(current_lp)) {
    throw NonFiniteTarget("log target is not finite at the current state");
  }
  std::vector<double> proposal = theta;
  propose_block(proposal, block, delta, chol, rng, z);
  const double lp = log_target(proposal);
  if (lp - current_lp >= 0.0 || std::log(rng.uniform()) < lp - current_lp) {
    theta = std::move(proposal);
    current_lp = lp;
    return true;
  }
  return false;
}

}  // namespace

void McmcConfig::validate(std::size_t) const {
  if (iterations < 1) throw InvalidParams("iterations must be >= 1");
  if (burn_in < 0 || burn_in >= iterations) throw InvalidParams("burn_in must be < iterations");
  if (thin < 1) throw InvalidParams("thin must be >= 1");
  if (chains < 1) throw InvalidParams("chains must be >= 1");
  if (!(delta1 > 0.0) || !(delta2 > 0.0)) throw InvalidParams("step scales must be > 0");
}

std::pair<ParamVector, bool> rw_block_step(
    const ParamVector& current, std::span<const int> block, double delta, const Matrix& sigma,
    const std::function<double(const ParamVector&)>& log_target, RngStream& rng) {
  double cur_lp = log_target(current);
  if (!std::isfinite(cur_lp)) {
    throw NonFiniteTarget("log target is not finite at the current state");
  }
  const Matrix chol = block_chol(sigma, block.size());
  std::vector<double> values = current.values();
  std::vector<double> z;
  auto wrapped = [&](std::span<const double> v) {
    return log_target(ParamVector(current.names(), std::vector<double>(v.begin(), v.end())));
  };
  const bool accepted =
      rw_block_step_cached(values, block, delta, chol, wrapped, cur_lp, rng, z);
  return {ParamVector(current.names(), std::move(values)), accepted};
}

Chain run_mcmc(const StateSpaceModel& model, const Dataset& data, const McmcConfig& config) {
  config.validate(model.param_spec.size());
  if (data.T() < 1) throw LengthMismatch("run_mcmc requires at least one observation");
  const auto start = Clock::now();

  RngStream root(config.seed);
  RngStream theta_rng = root.substream(1);
  RngStream latent_rng = root.substream(2);

  const auto block1 = block_indices(model.param_spec, ThetaBlock::Theta1);
  const auto block2 = block_indices(model.param_spec, ThetaBlock::Theta2);
  const Matrix chol1 = block_chol(config.sigma1, block1.size());
  const Matrix chol2 = block_chol(config.sigma2, block2.size());

  std::vector<double> theta = initial_theta(model, data);
  LatentTrajectory x = initial_latents(model, data, theta, latent_rng);

  auto log_target = [&](std::span<const double> th) {
    const double prior = model.log_prior(th);
    if (!std::isfinite(prior)) return -kInf;
    return prior + joint_log_density_canonical(model, x, data, th);
  };
  double current_lp = log_target(theta);

  Chain chain;
  chain.param_names = param_names(model.param_spec);
  chain.T = data.T();
  chain.state_dim = model.state_dim;

  long long acc1 = 0, acc2 = 0, n1 = 0, n2 = 0;
  SweepCounters sweep;
  std::vector<double> z;

  for (int it = 0; it < config.iterations; ++it) {
    RngStream iter_rng = theta_rng.substream(static_cast<std::uint64_t>(it));
    if (!block2.empty()) {
      RngStream r = iter_rng.substream(0);
      acc2 += rw_block_step_cached(theta, block2, config.delta2, chol2, log_target, current_lp,
                                   r, z);
      ++n2;
    }
    if (!block1.empty()) {
      RngStream r = iter_rng.substream(1);
      acc1 += rw_block_step_cached(theta, block1, config.delta1, chol1, log_target, current_lp,
                                   r, z);
      ++n1;
    }
    latent_sweep(model, data, theta, x, latent_rng.substream(static_cast<std::uint64_t>(it)),
                 sweep);
    current_lp = log_target(theta);  // latent moves invalidate the cached target

    if (it >= config.burn_in && (it - config.burn_in + 1) % config.thin == 0) {
      chain.draws.insert(chain.draws.end(), theta.begin(), theta.end());
      chain.latent_draws.insert(chain.latent_draws.end(), x.x.begin(), x.x.end());
      ++chain.kept;
    }
  }

  if (n1 > 0) chain.acceptance["theta1"] = static_cast<double>(acc1) / n1;
  if (n2 > 0) chain.acceptance["theta2"] = static_cast<double>(acc2) / n2;
  if (sweep.proposed > 0) {
    chain.acceptance["latent"] = static_cast<double>(sweep.accepted) / sweep.proposed;
  }
  chain.wall_time = seconds_since(start);
  return chain;
}

std::vector<Chain> run_mcmc_chains(const StateSpaceModel& model, const Dataset& data,
                                   const McmcConfig& config) {
  std::vector<Chain> chains;
  for (int c = 0; c < config.chains; ++c) {
    McmcConfig one = config;
    one.chains = 1;
    one.seed = config.seed + static_cast<std::uint64_t>(c);
    Chain chain = run_mcmc(model, data, one);
    chain.chain_index = c;
    chains.push_back(std::move(chain));
  }
  return chains;
}

Chain run_pmcmc(const StateSpaceModel& model, const Dataset& data, const McmcConfig& config,
                const PmcmcOptions& options) {
  config.validate(model.param_spec.size());
  if (data.T() < 1) throw LengthMismatch("run_pmcmc requires at least one observation");
  if (options.particles < 1) throw InvalidParams("particles must be >= 1");
  const auto start = Clock::now();

  RngStream root(config.seed);
  RngStream step_rng = root.substream(1);
  RngStream filter_rng = root.substream(2);
  RngStream traj_rng = root.substream(3);

  const auto block1 = block_indices(model.param_spec, ThetaBlock::Theta1);
  const auto block2 = block_indices(model.param_spec, ThetaBlock::Theta2);
  const Matrix chol1 = block_chol(config.sigma1, block1.size());
  const Matrix chol2 = block_chol(config.sigma2, block2.size());

  std::vector<double> theta = initial_theta(model, data);
  std::uint64_t filter_calls = 0;
  auto run_current_filter = [&](std::span<const double> th) {
    return run_filter(model, th, data, options.kind, options.particles,
                      filter_rng.substream(filter_calls++), options.resample_threshold);
  };

  FilterResult current = run_current_filter(theta);
  double current_lp = model.log_prior(theta) + current.loglik_hat;

  Chain chain;
  chain.param_names = param_names(model.param_spec);
  chain.T = data.T();
  chain.state_dim = model.state_dim;

  long long acc1 = 0, acc2 = 0, n1 = 0, n2 = 0;
  std::vector<double> z;

  auto pm_block_step = [&](std::span<const int> block, double delta, const Matrix& chol,
                           RngStream r, long long& acc) {
    std::vector<double> proposal = theta;
    propose_block(proposal, block, delta, chol, r, z);
    const double prior = model.log_prior(proposal);
    if (!std::isfinite(prior)) return;  // outside the support, reject
    double loglik;
    FilterResult cand;
    try {
      cand = run_current_filter(proposal);
      loglik = cand.loglik_hat;
    } catch (const ParticleCollapse&) {
      return;  // zero estimated likelihood, reject
    }
    const double lp = prior + loglik;
    if (lp - current_lp >= 0.0 || std::log(r.uniform()) < lp - current_lp) {
      theta = std::move(proposal);
      current = std::move(cand);
      current_lp = lp;
      ++acc;
    }
  };

  for (int it = 0; it < config.iterations; ++it) {
    RngStream iter_rng = step_rng.substream(static_cast<std::uint64_t>(it));
    if (!block2.empty()) {
      pm_block_step(block2, config.delta2, chol2, iter_rng.substream(0), acc2);
      ++n2;
    }
    if (!block1.empty()) {
      pm_block_step(block1, config.delta1, chol1, iter_rng.substream(1), acc1);
      ++n1;
    }
    if (it >= config.burn_in && (it - config.burn_in + 1) % config.thin == 0) {
      chain.draws.insert(chain.draws.end(), theta.begin(), theta.end());
      const LatentTrajectory traj =
          current.sample_trajectory(traj_rng);
      chain.latent_draws.insert(chain.latent_draws.end(), traj.x.begin(), traj.x.end());
      ++chain.kept;
    }
  }

  if (n1 > 0) chain.acceptance["theta1"] = static_cast<double>(acc1) / n1;
  if (n2 > 0) chain.acceptance["theta2"] = static_cast<double>(acc2) / n2;
  chain.wall_time = seconds_since(start);
  return chain;
}

std::vector<Chain> run_pmcmc_chains(const StateSpaceModel& model, const Dataset& data,
                                    const McmcConfig& config, const PmcmcOptions& options) {
  std::vector<Chain> chains;
  for (int c = 0; c < config.chains; ++c) {
    McmcConfig one = config;
    one.chains = 1;
    one.seed = config.seed + static_cast<std::uint64_t>(c);
    Chain chain = run_pmcmc(model, data, one, options);
    chain.chain_index = c;
    chains.push_back(std::move(chain));
  }
  return chains;
}

}  // namespace ssmup
