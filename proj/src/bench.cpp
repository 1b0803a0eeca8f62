#include "ssmup/bench.hpp"

#include <cmath>
#include <sstream>

#include "ssmup/errors.hpp"
#include "ssmup/kalman.hpp"
#include "ssmup/util.hpp"

namespace ssmup {

namespace {

double posterior_mean_param(const PosteriorArchive& a, const std::string& name) {
  int col = -1;
  for (std::size_t k = 0; k < a.param_names.size(); ++k) {
    if (a.param_names[k] == name) col = static_cast<int>(k);
  }
  if (col < 0) throw ParamMismatch("no such parameter: " + name);
  double s = 0.0;
  for (int j = 0; j < a.N; ++j) s += a.theta_row(j)[static_cast<std::size_t>(col)];
  return s / a.N;
}

double column_mean(std::span<const double> m, int rows, int cols, int col) {
  double s = 0.0;
  for (int r = 0; r < rows; ++r) s += m[static_cast<std::size_t>(r) * cols + col];
  return s / rows;
}

std::uint64_t replicate_seed(std::uint64_t base, int replicate) {
  return base + 1000003ULL * static_cast<std::uint64_t>(replicate + 1);
}

}  // namespace

double Sim1Result::median_bias(const std::string& key) const {
  auto it = bias.find(key);
  if (it == bias.end()) throw ParamMismatch("no bias series for key: " + key);
  return median(it->second);
}

namespace {

// Grid-oracle screen for sign-identified datasets: the neck between the two
// sign modes of c carries no mass (mode-hopping rates of random-walk
// samplers scale with it) and the identified-mode posterior sits near the
// simulation truth.
bool sign_identified(const Dataset& data, double truth_a, double truth_c,
                     double max_neck_mass) {
  const DistSpec prior = DistSpec::normal(0.0, 10.0);
  const auto ga = linspace(-1.5, 2.5, 120);
  const auto gc = linspace(-3.0, 3.0, 160);
  const GridPosterior g = grid_posterior(data, ga, gc, prior, prior);
  double neck = 0.0, pos = 0.0, mean_a = 0.0, mean_c = 0.0;
  for (std::size_t i = 0; i < ga.size(); ++i) {
    for (std::size_t j = 0; j < gc.size(); ++j) {
      const double p = g.prob[i * gc.size() + j];
      if (std::abs(gc[j]) < 0.3) neck += p;
      if (gc[j] > 0.0) {
        pos += p;
        mean_a += ga[i] * p;
        mean_c += gc[j] * p;
      }
    }
  }
  if (neck >= max_neck_mass || pos <= 0.0) return false;
  mean_a /= pos;
  mean_c /= pos;
  return std::abs(mean_a - truth_a) < 0.25 && std::abs(mean_c - truth_c) < 0.25;
}

}  // namespace

Sim1Result run_sim1(const Sim1Options& opt) {
  const StateSpaceModel model = make_lgssm();
  const ParamVector truth = lgssm_theta({opt.truth_a, opt.truth_c});

  Sim1Result res;
  auto push = [&](const std::string& key, double value) { res.bias[key].push_back(value); };

  int candidate = 0;
  for (int r = 0; r < opt.replicates; ++r) {
    std::uint64_t seed = 0;
    Dataset data;
    LatentTrajectory x_true;
    for (;;) {
      seed = replicate_seed(opt.seed, candidate++);
      if (candidate > 50 * opt.replicates) {
        throw Error("sim1: could not find enough sign-identified datasets");
      }
      auto sim = simulate_dataset(model, truth, opt.T, seed);
      if (opt.max_mode_bridge_mass >= 1.0 ||
          sign_identified(sim.second, opt.truth_a, opt.truth_c, opt.max_mode_bridge_mass)) {
        x_true = std::move(sim.first);
        data = std::move(sim.second);
        break;
      }
    }

    McmcConfig mc;
    mc.iterations = opt.iterations;
    mc.burn_in = opt.burn_in;
    mc.thin = opt.thin;
    mc.delta1 = opt.mcmc_delta;
    mc.seed = seed + 11;
    const Chain full = run_mcmc(model, data, mc);
    const PosteriorArchive full_arch =
        make_archive(std::span<const Chain>(&full, 1), model.id, data, mc.seed);
    push("BMC/a", posterior_mean_param(full_arch, "a") - opt.truth_a);
    push("BMC/c", posterior_mean_param(full_arch, "c") - opt.truth_c);

    for (int t : opt.reduced_times) {
      const Dataset head = data.head(t);
      McmcConfig rmc = mc;
      rmc.seed = seed + 17 + static_cast<std::uint64_t>(t);
      const Chain reduced = run_mcmc(model, head, rmc);
      const PosteriorArchive arch =
          make_archive(std::span<const Chain>(&reduced, 1), model.id, head, rmc.seed);
      const std::string tkey = "t=" + std::to_string(t);
      push("RMC/" + tkey + "/a", posterior_mean_param(arch, "a") - opt.truth_a);
      push("RMC/" + tkey + "/c", posterior_mean_param(arch, "c") - opt.truth_c);

      const Dataset fresh = data.tail(t);
      for (FilterKind kind : {FilterKind::Bootstrap, FilterKind::Auxiliary}) {
        UpdateConfig uc;
        uc.particles = opt.particles;
        uc.filter = kind;
        uc.delta1 = opt.update_delta;
        uc.delta2 = opt.update_delta;
        uc.jobs = opt.jobs;
        uc.seed = seed + 29;
        const UpdatedPosterior upd = update_run(arch, fresh, model, uc);
        const std::string label = kind == FilterKind::Bootstrap ? "BUMC" : "AUMC";
        const int P = static_cast<int>(upd.param_names.size());
        push(label + "/" + tkey + "/a",
             column_mean(upd.theta_upd, upd.N, P, 0) - opt.truth_a);
        push(label + "/" + tkey + "/c",
             column_mean(upd.theta_upd, upd.N, P, 1) - opt.truth_c);
      }
    }
  }

  for (const auto& [key, values] : res.bias) {
    // key "MODEL[/t=..]/param" -> long-format rows per replicate
    const auto slash = key.find('/');
    const std::string model_label = key.substr(0, slash);
    const std::string rest = key.substr(slash + 1);
    for (std::size_t i = 0; i < values.size(); ++i) {
      res.metrics.push_back(
          {"bias." + rest, model_label, static_cast<int>(i), values[i]});
    }
    res.metrics.push_back(
        {"median_bias." + rest, model_label, -1, median(values)});
  }
  return res;
}

std::string Sim2Result::timing_csv() const {
  std::ostringstream out;
  out << "model,t,M,seconds\n";
  for (const auto& c : cells) {
    out << c.model << "," << c.reduced_t << "," << c.particles << ","
        << format_double(c.seconds) << "\n";
  }
  return out.str();
}

Sim2Result run_sim2(const Sim2Options& opt) {
  OccupancyConfig cfg = opt.truth;
  cfg.sites = opt.sites;
  cfg.visits = opt.visits;
  cfg.years = opt.years;
  if (cfg.covariates.empty()) {
    cfg.covariates = simulate_covariates(opt.sites, opt.visits, opt.years, opt.seed + 5);
  }
  const StateSpaceModel model = make_occupancy(cfg);
  const ParamVector truth = occupancy_theta(cfg);

  const auto [z_true, data] = simulate_dataset(model, truth, opt.years, opt.seed);

  Sim2Result res;
  // realised occupancy of the simulated truth (site-major latent draws are
  // stored time-major here, so transpose on the fly)
  res.true_psi.assign(static_cast<std::size_t>(opt.years), 0.0);
  for (int t = 0; t < opt.years; ++t) {
    double s = 0.0;
    for (int i = 0; i < opt.sites; ++i) s += z_true.row(t)[i];
    res.true_psi[static_cast<std::size_t>(t)] = s / opt.sites;
  }

  McmcConfig mc;
  mc.iterations = opt.iterations;
  mc.burn_in = opt.burn_in;
  mc.thin = opt.thin;
  mc.delta1 = opt.mcmc_delta1;
  mc.delta2 = opt.mcmc_delta2;
  mc.seed = opt.seed + 11;
  const Chain full = run_mcmc(model, data, mc);

  // posterior-mean realised occupancy per year from the full fit
  std::vector<double> full_psi(static_cast<std::size_t>(opt.years), 0.0);
  for (int k = 0; k < full.kept; ++k) {
    const double* row = full.latent_draws.data() +
                        static_cast<std::size_t>(k) * opt.years * opt.sites;
    for (int t = 0; t < opt.years; ++t) {
      double s = 0.0;
      for (int i = 0; i < opt.sites; ++i) s += row[static_cast<std::size_t>(t) * opt.sites + i];
      full_psi[static_cast<std::size_t>(t)] += s / opt.sites;
    }
  }
  for (auto& p : full_psi) p /= full.kept;

  for (int t : opt.reduced_times) {
    const int window = opt.years - t;
    const std::span<const double> truth_window(res.true_psi.data() + t,
                                               static_cast<std::size_t>(window));
    const std::span<const double> full_window(full_psi.data() + t,
                                              static_cast<std::size_t>(window));
    const OccupancyTrend full_trend = occupancy_corr_bias(full_window, truth_window);
    res.full_correlation[t] = full_trend.correlation.value_or(0.0);
    res.full_bias_pct[t] = full_trend.bias_pct;
    res.metrics.push_back({"corr.t" + std::to_string(t), "BMC", -1,
                           full_trend.correlation.value_or(0.0)});
    res.metrics.push_back({"bias_pct.t" + std::to_string(t), "BMC", -1, full_trend.bias_pct});

    const Dataset head = data.head(t);
    McmcConfig rmc = mc;
    rmc.seed = opt.seed + 17 + static_cast<std::uint64_t>(t);
    const Chain reduced = run_mcmc(model, head, rmc);
    const PosteriorArchive arch =
        make_archive(std::span<const Chain>(&reduced, 1), model.id, head, rmc.seed);
    const Dataset fresh = data.tail(t);

    for (FilterKind kind : {FilterKind::Bootstrap, FilterKind::Auxiliary}) {
      const std::string label = kind == FilterKind::Bootstrap ? "BUMC" : "AUMC";
      for (int m : opt.particle_grid) {
        UpdateConfig uc;
        uc.particles = m;
        uc.filter = kind;
        uc.delta1 = opt.update_delta;
        uc.delta2 = opt.update_delta;
        uc.jobs = opt.jobs;
        uc.seed = opt.seed + 29;
        const UpdatedPosterior upd = update_run(arch, fresh, model, uc);

        std::vector<double> psi_hat(static_cast<std::size_t>(window), 0.0);
        for (int j = 0; j < upd.N; ++j) {
          const double* row = upd.latent_new.data() +
                              static_cast<std::size_t>(j) * window * opt.sites;
          for (int s = 0; s < window; ++s) {
            double acc = 0.0;
            for (int i = 0; i < opt.sites; ++i) {
              acc += row[static_cast<std::size_t>(s) * opt.sites + i];
            }
            psi_hat[static_cast<std::size_t>(s)] += acc / opt.sites;
          }
        }
        for (auto& p : psi_hat) p /= upd.N;

        const OccupancyTrend trend = occupancy_corr_bias(psi_hat, truth_window);
        Sim2Result::Cell cell;
        cell.model = label;
        cell.reduced_t = t;
        cell.particles = m;
        cell.seconds = upd.wall_time;
        cell.correlation = trend.correlation;
        cell.bias_pct = trend.bias_pct;
        cell.accept_rate = upd.accept_rate();
        res.cells.push_back(cell);

        const std::string suffix = ".t" + std::to_string(t) + ".M" + std::to_string(m);
        res.metrics.push_back(
            {"corr" + suffix, label, -1, trend.correlation.value_or(0.0)});
        res.metrics.push_back({"bias_pct" + suffix, label, -1, trend.bias_pct});
        res.metrics.push_back({"accept_rate" + suffix, label, -1, cell.accept_rate});
      }
    }
  }
  return res;
}

}  // namespace ssmup
