#include "ssmup/models.hpp"

#include <cmath>
#include <limits>
#include <memory>

#include "ssmup/errors.hpp"

namespace ssmup {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// logit saturation clamped to +-30 before exponentiation; invisible at double
// precision probabilities but avoids overflow.
double inv_logit(double eta) {
  if (eta > 30.0) eta = 30.0;
  if (eta < -30.0) eta = -30.0;
  return 1.0 / (1.0 + std::exp(-eta));
}

double log_bern(double value, double p) {
  if (value == 1.0) return p > 0.0 ? std::log(p) : -kInf;
  if (value == 0.0) return p < 1.0 ? std::log1p(-p) : -kInf;
  return -kInf;
}

}  // namespace

StateSpaceModel make_lgssm(const LgssmConfig&) {
  StateSpaceModel m;
  m.id = "lgssm";
  m.state_dim = 1;
  m.obs_dim = 1;
  m.param_spec = {
      {"a", DistSpec::normal(0.0, 10.0), ThetaBlock::Theta1, -1},
      {"c", DistSpec::normal(0.0, 10.0), ThetaBlock::Theta1, -1},
  };

  m.init_sample = [](StateSpaceModel::Theta th, RngStream& rng, std::span<double> x) {
    x[0] = rng.normal(th[0], 1.0);
  };
  m.init_logpdf = [](std::span<const double> x, StateSpaceModel::Theta th) {
    return norm_logpdf(x[0], th[0], 1.0);
  };
  m.trans_sample = [](std::span<const double> xp, StateSpaceModel::Theta th, int, RngStream& rng,
                      std::span<double> x) { x[0] = rng.normal(th[0] * xp[0], 1.0); };
  m.trans_logpdf = [](std::span<const double> x, std::span<const double> xp,
                      StateSpaceModel::Theta th, int) {
    return norm_logpdf(x[0], th[0] * xp[0], 1.0);
  };
  m.obs_sample = [](std::span<const double> x, StateSpaceModel::Theta th, int, RngStream& rng,
                    std::span<double> y) { y[0] = rng.normal(th[1] * x[0], 1.0); };
  m.obs_logpdf = [](ObsView y, std::span<const double> x, StateSpaceModel::Theta th, int) {
    if (y.is_missing(0)) return 0.0;
    return norm_logpdf(y[0], th[1] * x[0], 1.0);
  };
  m.lookahead_logpdf = [](ObsView y, std::span<const double> xp, StateSpaceModel::Theta th,
                          int t) {
    if (y.is_missing(0)) return 0.0;
    const double mean_state = (t == 0) ? th[0] : th[0] * xp[0];
    return norm_logpdf(y[0], th[1] * mean_state, 1.0);
  };
  m.chain_init_latents = [](const Dataset& data) {
    LatentTrajectory x;
    x.state_dim = 1;
    x.x.assign(static_cast<std::size_t>(data.T()), 0.0);
    for (int t = 0; t < data.T(); ++t) {
      const ObsView r = data.row(t);
      x.x[static_cast<std::size_t>(t)] = r.is_missing(0) ? 0.0 : r[0];
    }
    return x;
  };
  // Moment estimates: autocov_y(k) = c^2 a^(k-1) g1 for k >= 1, so the ratio
  // gives a; Var(y) = c^2/(1-a^2) + 1 gives |c|.
  m.chain_init_theta = [](const Dataset& data) {
    const int T = data.T();
    std::vector<double> ys;
    ys.reserve(static_cast<std::size_t>(T));
    for (int t = 0; t < T; ++t) {
      if (!data.row(t).is_missing(0)) ys.push_back(data.row(t)[0]);
    }
    const int n = static_cast<int>(ys.size());
    if (n < 4) return std::vector<double>{0.0, 1.0};
    double mu = 0.0;
    for (double v : ys) mu += v;
    mu /= n;
    auto autocov = [&](int lag) {
      double s = 0.0;
      for (int i = 0; i + lag < n; ++i) s += (ys[i] - mu) * (ys[i + lag] - mu);
      return s / n;
    };
    const double g0 = autocov(0), g1 = autocov(1), g2 = autocov(2);
    double a = (std::abs(g1) > 1e-8) ? g2 / g1 : 0.0;
    a = std::clamp(a, -0.9, 0.9);
    const double c = std::sqrt(std::max(g0 - 1.0, 0.04) * (1.0 - a * a));
    return std::vector<double>{a, c};
  };
  return m;
}

ParamVector lgssm_theta(const LgssmConfig& config) {
  return ParamVector({"a", "c"}, {config.a, config.c});
}

namespace {

// Covariates unpacked once; closures index flat arrays on the hot path.
struct OccData {
  int R, J, Tcov;
  std::vector<double> wind;   // R x J x Tcov
  std::vector<double> elev;   // R
  std::vector<double> precip; // R x Tcov

  double wind_at(int i, int j, int t) const {
    return wind[(static_cast<std::size_t>(i) * J + j) * Tcov + t];
  }
  double precip_at(int i, int t) const {
    return precip[static_cast<std::size_t>(i) * Tcov + t];
  }
};

// theta layout for the occupancy model.
enum : int {
  kAlphaP = 0,
  kBetaP,
  kAlphaPsi,
  kBetaPsi,
  kAlphaPhi,
  kBetaPhi,
  kGamma,
  kSigmaAlphaP,
  kSigmaBetaP,
  kSigmaAlphaPhi,
  kSigmaBetaPhi,
};

// P(z_{i,t} = 1 | z_{i,t-1}); t == 0 gives the initial occupancy psi_i.
double occ_prob(const OccData& d, int i, std::span<const double> x_prev,
                StateSpaceModel::Theta th, int t) {
  if (t == 0) return inv_logit(th[kAlphaPsi] + th[kBetaPsi] * d.elev[i]);
  if (t > d.Tcov) throw ShapeMismatch("occupancy covariates do not cover requested year");
  const double phi = inv_logit(th[kAlphaPhi] + th[kBetaPhi] * d.precip_at(i, t - 1));
  return x_prev[i] != 0.0 ? phi : th[kGamma];
}

double det_prob(const OccData& d, int i, int j, StateSpaceModel::Theta th, int t) {
  if (t >= d.Tcov) throw ShapeMismatch("occupancy covariates do not cover requested year");
  return inv_logit(th[kAlphaP] + th[kBetaP] * d.wind_at(i, j, t));
}

bool site_detected(const OccData& d, int i, ObsView y) {
  for (int j = 0; j < d.J; ++j) {
    const int k = i * d.J + j;
    if (!y.is_missing(k) && y[k] == 1.0) return true;
  }
  return false;
}

}  // namespace

StateSpaceModel make_occupancy(const OccupancyConfig& config) {
  const int R = config.sites;
  const int J = config.visits;
  if (R < 1 || J < 1) throw ShapeMismatch("occupancy model needs sites >= 1 and visits >= 1");

  const auto& wind = config.covariates.get("windSpeed");
  const auto& elev = config.covariates.get("elevation");
  const auto& precip = config.covariates.get("springPrecipitation");
  if (wind.shape.size() != 3 || wind.shape[0] != R || wind.shape[1] != J) {
    throw ShapeMismatch("windSpeed must have shape [sites, visits, years]");
  }
  if (elev.shape.size() != 1 || elev.shape[0] != R) {
    throw ShapeMismatch("elevation must have shape [sites]");
  }
  if (precip.shape.size() != 2 || precip.shape[0] != R || precip.shape[1] != wind.shape[2]) {
    throw ShapeMismatch("springPrecipitation must have shape [sites, years]");
  }

  auto data = std::make_shared<OccData>();
  data->R = R;
  data->J = J;
  data->Tcov = wind.shape[2];
  data->wind = wind.data;
  data->elev = elev.data;
  data->precip = precip.data;

  StateSpaceModel m;
  m.id = "occupancy";
  m.state_dim = R;
  m.obs_dim = R * J;
  m.param_spec = {
      {"alpha_p", DistSpec::normal(0.0, 1.0), ThetaBlock::Theta1, kSigmaAlphaP},
      {"beta_p", DistSpec::normal(0.0, 1.0), ThetaBlock::Theta1, kSigmaBetaP},
      {"alpha_psi", DistSpec::normal(0.0, 10.0), ThetaBlock::Theta1, -1},
      {"beta_psi", DistSpec::normal(0.0, 10.0), ThetaBlock::Theta1, -1},
      {"alpha_phi", DistSpec::normal(3.0, 1.0), ThetaBlock::Theta1, kSigmaAlphaPhi},
      {"beta_phi", DistSpec::normal(1.5, 1.0), ThetaBlock::Theta1, kSigmaBetaPhi},
      {"gamma", DistSpec::uniform(0.001, 1.0), ThetaBlock::Theta1, -1},
      {"sigma_alpha_p", DistSpec::truncated_normal(0.0, 10.0, 0.001, kInf), ThetaBlock::Theta2,
       -1},
      {"sigma_beta_p", DistSpec::truncated_normal(0.0, 10.0, 0.001, kInf), ThetaBlock::Theta2,
       -1},
      {"sigma_alpha_phi", DistSpec::truncated_normal(0.0, 10.0, 0.001, kInf), ThetaBlock::Theta2,
       -1},
      {"sigma_beta_phi", DistSpec::truncated_normal(0.0, 10.0, 0.001, kInf), ThetaBlock::Theta2,
       -1},
  };

  m.init_sample = [data](StateSpaceModel::Theta th, RngStream& rng, std::span<double> x) {
    for (int i = 0; i < data->R; ++i) {
      x[i] = rng.uniform() < occ_prob(*data, i, {}, th, 0) ? 1.0 : 0.0;
    }
  };
  m.init_logpdf = [data](std::span<const double> x, StateSpaceModel::Theta th) {
    double lp = 0.0;
    for (int i = 0; i < data->R; ++i) lp += log_bern(x[i], occ_prob(*data, i, {}, th, 0));
    return lp;
  };
  m.trans_sample = [data](std::span<const double> xp, StateSpaceModel::Theta th, int t,
                          RngStream& rng, std::span<double> x) {
    for (int i = 0; i < data->R; ++i) {
      x[i] = rng.uniform() < occ_prob(*data, i, xp, th, t) ? 1.0 : 0.0;
    }
  };
  m.trans_logpdf = [data](std::span<const double> x, std::span<const double> xp,
                          StateSpaceModel::Theta th, int t) {
    double lp = 0.0;
    for (int i = 0; i < data->R; ++i) lp += log_bern(x[i], occ_prob(*data, i, xp, th, t));
    return lp;
  };
  m.obs_sample = [data](std::span<const double> x, StateSpaceModel::Theta th, int t,
                        RngStream& rng, std::span<double> y) {
    for (int i = 0; i < data->R; ++i) {
      for (int j = 0; j < data->J; ++j) {
        const double p = x[i] != 0.0 ? det_prob(*data, i, j, th, t) : 0.0;
        y[static_cast<std::size_t>(i) * data->J + j] = rng.uniform() < p ? 1.0 : 0.0;
      }
    }
  };
  m.obs_logpdf = [data](ObsView y, std::span<const double> x, StateSpaceModel::Theta th, int t) {
    double lp = 0.0;
    for (int i = 0; i < data->R; ++i) {
      for (int j = 0; j < data->J; ++j) {
        const int k = i * data->J + j;
        if (y.is_missing(k)) continue;
        const double p = x[i] != 0.0 ? det_prob(*data, i, j, th, t) : 0.0;
        lp += log_bern(y[k], p);
        if (lp == -kInf) return -kInf;
      }
    }
    return lp;
  };

  // Constrained proposal: detected sites are occupied with certainty in the
  // posterior, so only undetected sites are drawn from the prior. The weight
  // correction trans - proposal restores unbiasedness.
  m.proposal_sample = [data](std::span<const double> xp, ObsView y, StateSpaceModel::Theta th,
                             int t, RngStream& rng, std::span<double> x) {
    for (int i = 0; i < data->R; ++i) {
      if (site_detected(*data, i, y)) {
        x[i] = 1.0;
      } else {
        x[i] = rng.uniform() < occ_prob(*data, i, xp, th, t) ? 1.0 : 0.0;
      }
    }
  };
  m.proposal_logpdf = [data](std::span<const double> x, std::span<const double> xp, ObsView y,
                             StateSpaceModel::Theta th, int t) {
    double lp = 0.0;
    for (int i = 0; i < data->R; ++i) {
      if (site_detected(*data, i, y)) {
        if (x[i] != 1.0) return -kInf;
        continue;  // point mass
      }
      lp += log_bern(x[i], occ_prob(*data, i, xp, th, t));
    }
    return lp;
  };

  // Exact one-step predictive, the transition-probability-weighted density.
  m.lookahead_logpdf = [data](ObsView y, std::span<const double> xp, StateSpaceModel::Theta th,
                              int t) {
    double lp = 0.0;
    for (int i = 0; i < data->R; ++i) {
      const double q = occ_prob(*data, i, xp, th, t);
      double occupied = 1.0, empty = 1.0;
      bool any = false;
      for (int j = 0; j < data->J; ++j) {
        const int k = i * data->J + j;
        if (y.is_missing(k)) continue;
        any = true;
        const double p = det_prob(*data, i, j, th, t);
        occupied *= (y[k] == 1.0) ? p : 1.0 - p;
        empty *= (y[k] == 1.0) ? 0.0 : 1.0;
      }
      if (!any) continue;
      const double site_density = q * occupied + (1.0 - q) * empty;
      if (site_density <= 0.0) return -kInf;
      lp += std::log(site_density);
    }
    return lp;
  };

  StateSpaceModel::ComponentOps ops;
  ops.components = R;
  ops.sample = [data](int k, std::span<const double> xp, StateSpaceModel::Theta th, int t,
                      RngStream& rng) {
    return rng.uniform() < occ_prob(*data, k, xp, th, t) ? 1.0 : 0.0;
  };
  ops.logpdf = [data](int k, double value, std::span<const double> xp, StateSpaceModel::Theta th,
                      int t) { return log_bern(value, occ_prob(*data, k, xp, th, t)); };
  ops.obs_logpdf = [data](int k, double value, ObsView y, StateSpaceModel::Theta th, int t) {
    double lp = 0.0;
    for (int j = 0; j < data->J; ++j) {
      const int idx = k * data->J + j;
      if (y.is_missing(idx)) continue;
      const double p = value != 0.0 ? det_prob(*data, k, j, th, t) : 0.0;
      lp += log_bern(y[idx], p);
      if (lp == -kInf) break;
    }
    return lp;
  };
  ops.frozen = [data](int k, ObsView y, StateSpaceModel::Theta, int) {
    return site_detected(*data, k, y);
  };
  ops.frozen_value = [](int, ObsView, StateSpaceModel::Theta, int) { return 1.0; };
  m.component_ops = std::move(ops);

  return m;
}

ParamVector occupancy_theta(const OccupancyConfig& c) {
  return ParamVector(
      {"alpha_p", "beta_p", "alpha_psi", "beta_psi", "alpha_phi", "beta_phi", "gamma",
       "sigma_alpha_p", "sigma_beta_p", "sigma_alpha_phi", "sigma_beta_phi"},
      {c.alpha_p, c.beta_p, c.alpha_psi, c.beta_psi, c.alpha_phi, c.beta_phi, c.gamma,
       c.sigma_alpha_p, c.sigma_beta_p, c.sigma_alpha_phi, c.sigma_beta_phi});
}

CovariateStore simulate_covariates(int sites, int visits, int years, std::uint64_t seed) {
  if (sites < 1 || visits < 1 || years < 1) {
    throw ShapeMismatch("simulate_covariates requires positive dimensions");
  }
  RngStream root(seed);
  CovariateStore store;

  auto fill = [](CovariateStore::Array& arr, RngStream rng) {
    std::size_t n = 1;
    for (int d : arr.shape) n *= static_cast<std::size_t>(d);
    arr.data.resize(n);
    for (auto& v : arr.data) v = rng.normal();
  };

  CovariateStore::Array wind{{sites, visits, years}, {}};
  CovariateStore::Array elev{{sites}, {}};
  CovariateStore::Array precip{{sites, years}, {}};
  fill(wind, root.substream(0));
  fill(elev, root.substream(1));
  fill(precip, root.substream(2));
  store.arrays.emplace("windSpeed", std::move(wind));
  store.arrays.emplace("elevation", std::move(elev));
  store.arrays.emplace("springPrecipitation", std::move(precip));
  return store;
}

StateSpaceModel build_model(const std::string& model_id, int state_dim, int obs_dim,
                            const CovariateStore& covariates) {
  if (model_id == "lgssm") {
    if (state_dim != 1 || obs_dim != 1) throw ShapeMismatch("lgssm is univariate");
    return make_lgssm();
  }
  if (model_id == "occupancy") {
    if (state_dim < 1 || obs_dim % state_dim != 0) {
      throw ShapeMismatch("occupancy dims must satisfy obs_dim = sites * visits");
    }
    OccupancyConfig cfg;
    cfg.sites = state_dim;
    cfg.visits = obs_dim / state_dim;
    cfg.covariates = covariates;
    return make_occupancy(cfg);
  }
  throw ParamMismatch("unknown model id: " + model_id);
}

}  // namespace ssmup
