#include "ssmup/ssm.hpp"

#include <algorithm>
#include <limits>

#include "ssmup/errors.hpp"

namespace ssmup {

double StateSpaceModel::log_prior(Theta theta) const {
  double lp = 0.0;
  for (std::size_t i = 0; i < param_spec.size(); ++i) {
    DistSpec prior = param_spec[i].prior;
    if (param_spec[i].hyper_sd_index >= 0) {
      prior.params[1] = theta[static_cast<std::size_t>(param_spec[i].hyper_sd_index)];
      if (!(prior.params[1] > 0.0)) return -std::numeric_limits<double>::infinity();
    }
    lp += log_density(prior, theta[i]);
  }
  return lp;
}

std::pair<LatentTrajectory, Dataset> simulate_dataset(const StateSpaceModel& model,
                                                      const ParamVector& theta, int T,
                                                      std::uint64_t seed) {
  if (T < 1) throw LengthMismatch("simulate_dataset requires T >= 1");
  const std::vector<double> th = align_params(model.param_spec, theta);
  RngStream rng(seed);

  LatentTrajectory x;
  x.state_dim = model.state_dim;
  x.x.assign(static_cast<std::size_t>(T) * model.state_dim, 0.0);
  Dataset d;
  d.obs_dim = model.obs_dim;
  d.y.assign(static_cast<std::size_t>(T) * model.obs_dim, 0.0);
  d.missing.assign(static_cast<std::size_t>(T) * model.obs_dim, 0);

  std::vector<double> yrow(static_cast<std::size_t>(model.obs_dim));
  for (int t = 0; t < T; ++t) {
    auto state_rng = rng.substream(2 * static_cast<std::uint64_t>(t));
    auto obs_rng = rng.substream(2 * static_cast<std::uint64_t>(t) + 1);
    if (t == 0) {
      model.init_sample(th, state_rng, x.row(0));
    } else {
      model.trans_sample(x.row(t - 1), th, t, state_rng, x.row(t));
    }
    model.obs_sample(x.row(t), th, t, obs_rng, yrow);
    std::copy(yrow.begin(), yrow.end(),
              d.y.begin() + static_cast<std::size_t>(t) * model.obs_dim);
  }
  return {std::move(x), std::move(d)};
}

double joint_log_density(const StateSpaceModel& model, const LatentTrajectory& x,
                         const Dataset& y, const ParamVector& theta) {
  const std::vector<double> th = align_params(model.param_spec, theta);
  return joint_log_density_canonical(model, x, y, th);
}

double joint_log_density_canonical(const StateSpaceModel& model, const LatentTrajectory& x,
                                   const Dataset& y, std::span<const double> th) {
  if (x.T() != y.T()) throw LengthMismatch("latent trajectory and dataset lengths differ");
  if (x.state_dim != model.state_dim || y.obs_dim != model.obs_dim) {
    throw LengthMismatch("trajectory/dataset dimensions do not match the model");
  }
  double total = model.init_logpdf(x.row(0), th);
  for (int t = 1; t < x.T(); ++t) {
    total += model.trans_logpdf(x.row(t), x.row(t - 1), th, t);
  }
  for (int t = 0; t < y.T(); ++t) {
    const ObsView r = y.row(t);
    if (r.all_missing()) continue;
    total += model.obs_logpdf(r, x.row(t), th, t);
  }
  return total;
}

}  // namespace ssmup
