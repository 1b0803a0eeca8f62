#include "ssmup/updater.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstring>
#include <functional>
#include <limits>
#include <mutex>
#include <thread>

#include "ssmup/errors.hpp"
#include "ssmup/util.hpp"

namespace ssmup {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Row streams are keyed on the row's content, so permuting archive rows
// permutes the output rows identically.
std::uint64_t row_content_hash(const PosteriorArchive& a, int j) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto th = a.theta_row(j);
  const auto lat = a.latent_row(j);
  h = fnv1a(h, th.data(), th.size_bytes());
  h = fnv1a(h, lat.data(), lat.size_bytes());
  return h;
}

void run_parallel(int n, int jobs, const std::function<void(int)>& body) {
  if (jobs <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const int workers = std::min(jobs, n);
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

// Column map from model param_spec order to archive columns.
std::vector<int> archive_column_map(const std::vector<ParamSpecEntry>& spec,
                                    const std::vector<std::string>& names) {
  if (names.size() != spec.size()) {
    throw ParamMismatch("archive parameter count does not match the model");
  }
  std::vector<int> map(spec.size(), -1);
  for (std::size_t i = 0; i < spec.size(); ++i) {
    for (std::size_t k = 0; k < names.size(); ++k) {
      if (names[k] == spec[i].name) {
        map[i] = static_cast<int>(k);
        break;
      }
    }
    if (map[i] < 0) throw ParamMismatch("archive lacks model parameter: " + spec[i].name);
  }
  return map;
}

}  // namespace

double UpdatedPosterior::accept_rate() const {
  if (accept_flags.empty()) return 0.0;
  double s = 0.0;
  for (auto f : accept_flags) s += f;
  return s / static_cast<double>(accept_flags.size());
}

std::vector<ParticleEnsemble> replicate_history(const PosteriorArchive& archive,
                                                const StateSpaceModel& model, int row,
                                                int particles) {
  if (row < 0 || row >= archive.N) throw IndexOutOfRange("archive row out of range");
  if (particles < 1) throw InvalidParams("particles must be >= 1");
  const auto map = archive_column_map(model.param_spec, archive.param_names);
  std::vector<double> theta(model.param_spec.size());
  const auto raw = archive.theta_row(row);
  for (std::size_t i = 0; i < theta.size(); ++i) theta[i] = raw[static_cast<std::size_t>(map[i])];

  std::vector<ParticleEnsemble> out;
  out.reserve(static_cast<std::size_t>(archive.t));
  double cum_logw = 0.0;
  for (int s = 0; s < archive.t; ++s) {
    const ObsView y = archive.data.row(s);
    const auto xs = archive.latent_at(row, s);
    if (!y.all_missing()) cum_logw += model.obs_logpdf(y, xs, theta, s);
    ParticleEnsemble e;
    e.particles = particles;
    e.state_dim = model.state_dim;
    e.time = s + 1;
    e.states.resize(static_cast<std::size_t>(particles) * model.state_dim);
    for (int i = 0; i < particles; ++i) {
      std::copy(xs.begin(), xs.end(),
                e.states.begin() + static_cast<std::size_t>(i) * model.state_dim);
    }
    e.log_weights.assign(static_cast<std::size_t>(particles), cum_logw);
    e.ancestors.resize(static_cast<std::size_t>(particles));
    for (int i = 0; i < particles; ++i) e.ancestors[static_cast<std::size_t>(i)] = i;
    out.push_back(std::move(e));
  }
  return out;
}

TwoStageProposal propose_two_stage(const ParamVector& theta_r,
                                   const std::vector<ParamSpecEntry>& spec,
                                   const std::vector<ParamTransform>& transforms, double delta1,
                                   double delta2, const Matrix& sigma1, const Matrix& sigma2,
                                   RngStream& rng) {
  if (theta_r.size() != spec.size()) throw ParamMismatch("theta does not match the spec");
  const auto block1 = block_indices(spec, ThetaBlock::Theta1);
  const auto block2 = block_indices(spec, ThetaBlock::Theta2);

  std::vector<double> u(theta_r.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    u[i] = transforms[i].to_unconstrained(theta_r[i]);
  }

  auto step_block = [&](std::span<const int> block, double delta, const Matrix& sigma) {
    if (block.empty()) return;
    const Matrix chol = sigma.n == 0 ? Matrix::identity(static_cast<int>(block.size()))
                                     : sigma.cholesky();
    std::vector<double> z(block.size());
    for (auto& v : z) v = rng.normal();
    for (std::size_t i = 0; i < block.size(); ++i) {
      double step = 0.0;
      for (std::size_t k = 0; k <= i; ++k) {
        step += chol(static_cast<int>(i), static_cast<int>(k)) * z[k];
      }
      u[static_cast<std::size_t>(block[i])] += delta * step;
    }
  };

  // Hyperparameters first, then the remaining parameters; both symmetric.
  step_block(block2, delta2, sigma2);
  step_block(block1, delta1, sigma1);

  std::vector<double> star(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) star[i] = transforms[i].to_constrained(u[i]);
  return {ParamVector(theta_r.names(), std::move(star)), 0.0};
}

double updated_mhar(double log_prior_star, double log_prior_r, double log_hastings,
                    double loglik_new_star, double loglik_new_r) {
  if (loglik_new_star == -kInf && loglik_new_r == -kInf) {
    throw BothCollapsed("both filter runs collapsed; draw flagged and rejected");
  }
  if (loglik_new_star == -kInf || log_prior_star == -kInf) return 0.0;
  if (loglik_new_r == -kInf) return 1.0;
  const double log_ratio =
      log_prior_star - log_prior_r + log_hastings + loglik_new_star - loglik_new_r;
  return std::min(1.0, std::exp(log_ratio));
}

UpdatedPosterior update_run(const PosteriorArchive& archive, const Dataset& new_data,
                            const StateSpaceModel& model, const UpdateConfig& config) {
  if (config.particles < 1) throw InvalidParams("particles must be >= 1");
  if (!(config.delta1 > 0.0) || !(config.delta2 > 0.0)) {
    throw InvalidParams("step scales must be > 0");
  }
  if (new_data.T() > 0 && new_data.obs_dim != archive.data.obs_dim) {
    throw ShapeMismatch("new data width differs from the archived data");
  }
  if (archive.state_dim != model.state_dim) {
    throw ShapeMismatch("archive state dimension does not match the model");
  }
  const auto map = archive_column_map(model.param_spec, archive.param_names);
  const auto start = std::chrono::steady_clock::now();

  const int P = static_cast<int>(model.param_spec.size());
  const int t0 = archive.t;
  const int steps = new_data.T();
  const Dataset full = steps > 0 ? archive.data.concat(new_data) : archive.data;
  const auto transforms = make_transforms(model.param_spec);
  const auto names = param_names(model.param_spec);

  // Prior density on the proposal scale: constrained prior plus Jacobian.
  auto log_prior_u = [&](std::span<const double> th) {
    const double lp = model.log_prior(th);
    if (!std::isfinite(lp)) return -kInf;
    return lp + log_jacobian_sum(transforms, th);
  };

  UpdatedPosterior out;
  out.param_names = names;
  out.N = archive.N;
  out.new_steps = steps;
  out.state_dim = model.state_dim;
  out.theta_upd.assign(static_cast<std::size_t>(archive.N) * P, 0.0);
  out.latent_new.assign(static_cast<std::size_t>(archive.N) * steps * model.state_dim, 0.0);
  out.accept_flags.assign(static_cast<std::size_t>(archive.N), 0);
  out.loglik_candidate.assign(static_cast<std::size_t>(archive.N), 0.0);
  out.loglik_reference.assign(static_cast<std::size_t>(archive.N), 0.0);
  out.collapsed.assign(static_cast<std::size_t>(archive.N), 0);

  const RngStream root(config.seed);

  auto update_row = [&](int j) {
    RngStream row_rng = root.substream(row_content_hash(archive, j));

    std::vector<double> theta_r(static_cast<std::size_t>(P));
    const auto raw = archive.theta_row(j);
    for (int i = 0; i < P; ++i) {
      theta_r[static_cast<std::size_t>(i)] = raw[static_cast<std::size_t>(map[i])];
    }

    RngStream prop_rng = row_rng.substream(0);
    const TwoStageProposal prop =
        propose_two_stage(ParamVector(names, theta_r), model.param_spec, transforms,
                          config.delta1, config.delta2, config.sigma1, config.sigma2, prop_rng);
    const std::vector<double>& theta_star = prop.theta_star.values();

    // The configured filter continues from the replicated history
    // (all M particles equal the archived x_t with equal weights; the history
    // weight is theta-dependent but constant across particles, so it cancels
    // from every new-step quantity). Run once per theta.
    double ll_r = 0.0, ll_s = 0.0;
    FilterResult run_r, run_s;
    bool have_r = false, have_s = false;
    if (steps > 0) {
      const auto init = archive.latent_at(j, t0 - 1);
      try {
        run_r = run_filter(model, theta_r, full, config.filter, config.particles,
                           row_rng.substream(1), config.resample_threshold, t0, init);
        ll_r = run_r.loglik_hat;
        have_r = true;
      } catch (const ParticleCollapse&) {
        ll_r = -kInf;
      }
      try {
        run_s = run_filter(model, theta_star, full, config.filter, config.particles,
                           row_rng.substream(2), config.resample_threshold, t0, init);
        ll_s = run_s.loglik_hat;
        have_s = true;
      } catch (const ParticleCollapse&) {
        ll_s = -kInf;
      }
    }

    // Metropolis-Hastings decision with the updated acceptance ratio.
    double prob;
    try {
      prob = updated_mhar(log_prior_u(theta_star), log_prior_u(theta_r), prop.log_hastings,
                          ll_s, ll_r);
    } catch (const BothCollapsed&) {
      out.collapsed[static_cast<std::size_t>(j)] = 1;
      prob = 0.0;
    }
    const bool accept = row_rng.substream(3).uniform() < prob;

    out.accept_flags[static_cast<std::size_t>(j)] = accept ? 1 : 0;
    out.loglik_candidate[static_cast<std::size_t>(j)] = ll_s;
    out.loglik_reference[static_cast<std::size_t>(j)] = ll_r;
    const auto& chosen = accept ? theta_star : theta_r;
    std::copy(chosen.begin(), chosen.end(),
              out.theta_upd.begin() + static_cast<std::size_t>(j) * P);

    if (steps > 0) {
      RngStream traj_rng = row_rng.substream(4);
      auto dest = out.latent_new.begin() +
                  static_cast<std::size_t>(j) * steps * model.state_dim;
      const FilterResult* winner = accept ? (have_s ? &run_s : nullptr)
                                          : (have_r ? &run_r : nullptr);
      if (winner != nullptr) {
        const LatentTrajectory traj = winner->sample_trajectory(traj_rng);
        std::copy(traj.x.begin(), traj.x.end(), dest);
      } else {
        // Both runs collapsed: fall back to a prior forward simulation from
        // the archived state under the kept theta.
        std::vector<double> prev(archive.latent_at(j, t0 - 1).begin(),
                                 archive.latent_at(j, t0 - 1).end());
        std::vector<double> curv(static_cast<std::size_t>(model.state_dim));
        for (int s = 0; s < steps; ++s) {
          RngStream srng = traj_rng.substream(static_cast<std::uint64_t>(s) + 1);
          model.trans_sample(prev, chosen, t0 + s, srng, curv);
          std::copy(curv.begin(), curv.end(),
                    dest + static_cast<std::size_t>(s) * model.state_dim);
          prev = curv;
        }
      }
    }
  };

  run_parallel(archive.N, config.jobs, update_row);
  out.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

PosteriorArchive archive_from_update(const PosteriorArchive& base, const UpdatedPosterior& upd,
                                     const Dataset& new_data) {
  if (upd.N != base.N) throw LengthMismatch("update and archive row counts differ");
  if (new_data.T() != upd.new_steps) {
    throw LengthMismatch("new data length does not match the update");
  }
  PosteriorArchive a;
  a.model_id = base.model_id;
  a.t = base.t + upd.new_steps;
  a.N = base.N;
  a.state_dim = base.state_dim;
  a.param_names = upd.param_names;
  a.theta_draws = upd.theta_upd;
  a.seed = base.seed;
  a.data = upd.new_steps > 0 ? base.data.concat(new_data) : base.data;

  const std::size_t old_len = static_cast<std::size_t>(base.t) * base.state_dim;
  const std::size_t new_len = static_cast<std::size_t>(upd.new_steps) * base.state_dim;
  a.latent_draws.reserve(static_cast<std::size_t>(base.N) * (old_len + new_len));
  for (int j = 0; j < base.N; ++j) {
    const auto hist = base.latent_row(j);
    a.latent_draws.insert(a.latent_draws.end(), hist.begin(), hist.end());
    const auto* fresh = upd.latent_new.data() + static_cast<std::size_t>(j) * new_len;
    a.latent_draws.insert(a.latent_draws.end(), fresh, fresh + new_len);
  }
  return a;
}

}  // namespace ssmup
