// ssmup: simulate state-space data, fit with MCMC/pMCMC, archive posteriors,
// update archived fits with new observations and report diagnostics.
//
// Exit codes: 0 success, 2 usage, 3 IO, 4 inference, 5 archive integrity.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nlohmann/json.hpp"
#include "ssmup/archive.hpp"
#include "ssmup/bench.hpp"
#include "ssmup/diagnostics.hpp"
#include "ssmup/errors.hpp"
#include "ssmup/kalman.hpp"
#include "ssmup/models.hpp"
#include "ssmup/updater.hpp"
#include "ssmup/util.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;
using namespace ssmup;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitInference = 4;
constexpr int kExitArchive = 5;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int default_jobs() {
  if (const char* env = std::getenv("SSMUP_JOBS")) {
    const int j = std::atoi(env);
    if (j >= 1) return j;
  }
  return 1;
}

// --params accepts either a JSON file ({"name": value, ...}) or inline
// comma-separated name=value pairs.
std::map<std::string, double> parse_params(const std::string& arg) {
  std::map<std::string, double> out;
  if (arg.empty()) return out;
  if (fs::exists(arg) && fs::is_regular_file(arg)) {
    const auto j = ordered_json::parse(read_file(arg));
    for (const auto& [k, v] : j.items()) out[k] = v.get<double>();
    return out;
  }
  std::size_t start = 0;
  while (start < arg.size()) {
    auto end = arg.find(',', start);
    if (end == std::string::npos) end = arg.size();
    const std::string pair = arg.substr(start, end - start);
    const auto eq = pair.find('=');
    if (eq == std::string::npos) {
      throw UsageError("--params entries must look like name=value (got '" + pair + "')");
    }
    out[pair.substr(0, eq)] = parse_double(pair.substr(eq + 1));
    start = end + 1;
  }
  return out;
}

std::string truth_csv(const ParamVector& theta, const LatentTrajectory& x) {
  std::ostringstream out;
  out << "kind,index,name,value\n";
  for (std::size_t i = 0; i < theta.size(); ++i) {
    out << "theta,0," << theta.names()[i] << "," << format_double(theta[i]) << "\n";
  }
  for (int t = 0; t < x.T(); ++t) {
    for (int d = 0; d < x.state_dim; ++d) {
      out << "latent," << (t + 1) << ",x_" << (d + 1) << ","
          << format_double(x.row(t)[d]) << "\n";
    }
  }
  return out.str();
}

struct Truth {
  std::map<std::string, double> theta;
  LatentTrajectory latents;
};

Truth load_truth(const fs::path& file) {
  Truth tr;
  const auto rows = read_csv(file);
  if (rows.empty() || rows[0] != std::vector<std::string>{"kind", "index", "name", "value"}) {
    throw UsageError("truth file must have header kind,index,name,value");
  }
  int max_t = 0, max_d = 0;
  std::vector<std::tuple<int, int, double>> latent_cells;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& f = rows[r];
    if (f[0] == "theta") {
      tr.theta[f[2]] = parse_double(f[3]);
    } else if (f[0] == "latent") {
      const int t = static_cast<int>(parse_double(f[1]));
      const int d = static_cast<int>(parse_double(f[2].substr(2)));
      max_t = std::max(max_t, t);
      max_d = std::max(max_d, d);
      latent_cells.emplace_back(t, d, parse_double(f[3]));
    }
  }
  tr.latents.state_dim = std::max(max_d, 1);
  tr.latents.x.assign(static_cast<std::size_t>(max_t) * tr.latents.state_dim, 0.0);
  for (const auto& [t, d, v] : latent_cells) {
    tr.latents.x[static_cast<std::size_t>(t - 1) * tr.latents.state_dim + (d - 1)] = v;
  }
  return tr;
}

StateSpaceModel model_for_data(const std::string& model_id, const Dataset& data, int sites,
                               int visits) {
  if (model_id == "lgssm") return make_lgssm();
  if (model_id == "occupancy") {
    OccupancyConfig cfg;
    cfg.sites = sites;
    cfg.visits = visits;
    if (sites * visits != data.obs_dim) {
      throw UsageError("sites * visits does not match the dataset width");
    }
    cfg.covariates = data.covariates;
    return make_occupancy(cfg);
  }
  throw UsageError("unknown model: " + model_id);
}

// Reads sites/visits from the dataset dir's meta.json when present.
void read_meta_shape(const fs::path& dir, int& sites, int& visits) {
  const auto meta_path = dir / "meta.json";
  if (!fs::exists(meta_path)) return;
  const auto meta = ordered_json::parse(read_file(meta_path));
  if (meta.contains("sites")) sites = meta["sites"].get<int>();
  if (meta.contains("visits")) visits = meta["visits"].get<int>();
}

int cmd_simulate(const std::string& model_id, const std::string& params_arg, int T,
                 std::uint64_t seed, const std::string& out_dir, int sites, int visits) {
  const auto params = parse_params(params_arg);
  fs::create_directories(out_dir);

  ordered_json meta;
  meta["model"] = model_id;
  meta["T"] = T;
  meta["seed"] = seed;

  if (model_id == "lgssm") {
    LgssmConfig cfg;
    if (auto it = params.find("a"); it != params.end()) cfg.a = it->second;
    if (auto it = params.find("c"); it != params.end()) cfg.c = it->second;
    const StateSpaceModel model = make_lgssm(cfg);
    const ParamVector theta = lgssm_theta(cfg);
    const auto [x, data] = simulate_dataset(model, theta, T, seed);
    write_file(fs::path(out_dir) / "data.csv", dataset_to_csv(data));
    write_file(fs::path(out_dir) / "truth.csv", truth_csv(theta, x));
    meta["params"] = {{"a", cfg.a}, {"c", cfg.c}};
  } else if (model_id == "occupancy") {
    OccupancyConfig cfg;
    cfg.sites = sites;
    cfg.visits = visits;
    cfg.years = T;
    auto set = [&](const char* name, double& field) {
      if (auto it = params.find(name); it != params.end()) field = it->second;
    };
    set("alpha_p", cfg.alpha_p);
    set("beta_p", cfg.beta_p);
    set("alpha_psi", cfg.alpha_psi);
    set("beta_psi", cfg.beta_psi);
    set("alpha_phi", cfg.alpha_phi);
    set("beta_phi", cfg.beta_phi);
    set("gamma", cfg.gamma);
    set("sigma_alpha_p", cfg.sigma_alpha_p);
    set("sigma_beta_p", cfg.sigma_beta_p);
    set("sigma_alpha_phi", cfg.sigma_alpha_phi);
    set("sigma_beta_phi", cfg.sigma_beta_phi);
    cfg.covariates = simulate_covariates(sites, visits, T, seed + 5);
    const StateSpaceModel model = make_occupancy(cfg);
    const ParamVector theta = occupancy_theta(cfg);
    const auto [z, data] = simulate_dataset(model, theta, T, seed);
    write_file(fs::path(out_dir) / "data.csv", dataset_to_long_csv(data, sites, visits));
    write_file(fs::path(out_dir) / "covariates.json", covariates_to_json(cfg.covariates));
    write_file(fs::path(out_dir) / "truth.csv", truth_csv(theta, z));
    meta["sites"] = sites;
    meta["visits"] = visits;
    ordered_json p;
    for (std::size_t i = 0; i < theta.size(); ++i) p[theta.names()[i]] = theta[i];
    meta["params"] = p;
  } else {
    throw UsageError("unknown model: " + model_id);
  }

  write_file(fs::path(out_dir) / "meta.json", meta.dump(2) + "\n");
  return 0;
}

void write_traces(const fs::path& dir, const std::vector<Chain>& chains) {
  if (chains.empty() || chains[0].kept == 0) return;
  fs::create_directories(dir);
  const int kept = chains[0].kept;
  const auto& names = chains[0].param_names;
  for (std::size_t p = 0; p < names.size(); ++p) {
    std::vector<double> cols;
    cols.reserve(chains.size() * static_cast<std::size_t>(kept));
    for (const auto& c : chains) {
      for (int i = 0; i < kept; ++i) {
        cols.push_back(c.draws[static_cast<std::size_t>(i) * names.size() + p]);
      }
    }
    write_file(dir / (names[p] + ".csv"),
               trace_to_csv(cols, static_cast<int>(chains.size()), kept));
  }
}

int cmd_fit(const std::string& model_id, const std::string& data_dir, const std::string& algo,
            int iters, int burnin, int thin, int chains, int particles, std::uint64_t seed,
            int truncate_t, double delta1, double delta2, const std::string& label,
            const std::string& out_dir, int sites, int visits) {
  read_meta_shape(data_dir, sites, visits);
  Dataset data = load_dataset(data_dir);
  if (truncate_t > 0) data = data.head(truncate_t);
  const StateSpaceModel model = model_for_data(model_id, data, sites, visits);

  McmcConfig mc;
  mc.iterations = iters;
  mc.burn_in = burnin;
  mc.thin = thin;
  mc.chains = chains;
  mc.delta1 = delta1;
  mc.delta2 = delta2;
  mc.seed = seed;

  std::vector<Chain> run;
  if (algo == "mcmc") {
    run = run_mcmc_chains(model, data, mc);
  } else if (algo == "pmcmc-bootstrap" || algo == "pmcmc-aux") {
    PmcmcOptions opts;
    opts.kind = algo == "pmcmc-bootstrap" ? FilterKind::Bootstrap : FilterKind::Auxiliary;
    opts.particles = particles;
    run = run_pmcmc_chains(model, data, mc, opts);
  } else {
    throw UsageError("unknown algorithm: " + algo);
  }

  const PosteriorArchive archive = make_archive(run, model.id, data, seed);
  save_archive(archive, out_dir);
  write_traces(fs::path(out_dir) / "traces", run);

  ordered_json report;
  report["label"] = label.empty() ? algo : label;
  report["algo"] = algo;
  report["iterations"] = iters;
  report["burn_in"] = burnin;
  report["thin"] = thin;
  report["chains"] = chains;
  if (algo != "mcmc") report["particles"] = particles;
  report["seed"] = seed;
  report["N"] = archive.N;
  double wall = 0.0;
  ordered_json acc;
  for (const auto& c : run) {
    wall += c.wall_time;
    for (const auto& [k, v] : c.acceptance) acc[k] = v;
  }
  report["acceptance"] = acc;
  report["wall_time_sec"] = wall;
  write_file(fs::path(out_dir) / "run_report.json", report.dump(2) + "\n");
  return 0;
}

int cmd_update(const std::string& archive_dir, const std::string& new_data_arg,
               const std::string& filter, int particles, double delta1, double delta2,
               std::uint64_t seed, int jobs, const std::string& label,
               const std::string& out_dir) {
  const PosteriorArchive archive = load_archive(archive_dir);

  Dataset fresh;
  fresh.obs_dim = archive.data.obs_dim;
  CovariateStore covariates = archive.data.covariates;
  if (!new_data_arg.empty()) {
    const fs::path p(new_data_arg);
    const Dataset incoming =
        fs::is_directory(p) ? load_dataset(p)
                            : [&] {
                                const std::string text = read_file(p);
                                return text.rfind("site,", 0) == 0
                                           ? dataset_from_long_csv_text(text, 0, 0)
                                           : dataset_from_csv_text(text);
                              }();
    if (!incoming.covariates.empty()) covariates = incoming.covariates;
    if (incoming.T() > archive.t) {
      // Overlapping rows must agree with the archived observations.
      for (int t = 0; t < archive.t; ++t) {
        const ObsView a = archive.data.row(t);
        const ObsView b = incoming.row(t);
        for (int k = 0; k < archive.data.obs_dim; ++k) {
          if (!b.is_missing(k) && (a.is_missing(k) || a[k] != b[k])) {
            throw UsageError("new data disagrees with archived observations at t=" +
                             std::to_string(t + 1));
          }
        }
      }
      fresh = incoming.tail(archive.t);
    } else if (incoming.T() > 0 && incoming.T() < archive.t) {
      throw UsageError("new data ends before the archived time " + std::to_string(archive.t));
    }
    // incoming.T() == archive.t or empty file -> degenerate update
  }
  fresh.covariates = covariates;

  Dataset archive_data = archive.data;
  archive_data.covariates = covariates;
  PosteriorArchive working = archive;
  working.data = archive_data;

  const StateSpaceModel model =
      build_model(archive.model_id, archive.state_dim, archive.data.obs_dim, covariates);

  UpdateConfig uc;
  uc.particles = particles;
  uc.filter = filter == "auxiliary" ? FilterKind::Auxiliary : FilterKind::Bootstrap;
  if (filter != "auxiliary" && filter != "bootstrap") {
    throw UsageError("--filter must be bootstrap or auxiliary");
  }
  uc.delta1 = delta1;
  uc.delta2 = delta2;
  uc.jobs = jobs;
  uc.seed = seed;

  const UpdatedPosterior upd = update_run(working, fresh, model, uc);
  const PosteriorArchive out = archive_from_update(working, upd, fresh);
  save_archive(out, out_dir);

  int collapsed = 0;
  for (auto c : upd.collapsed) collapsed += c;
  ordered_json report;
  report["label"] = label.empty() ? (filter == "auxiliary" ? "AUMC" : "BUMC") : label;
  report["filter"] = filter;
  report["particles"] = particles;
  report["delta1"] = delta1;
  report["delta2"] = delta2;
  report["seed"] = seed;
  report["N"] = upd.N;
  report["new_steps"] = upd.new_steps;
  report["accept_rate"] = upd.accept_rate();
  report["collapsed_draws"] = collapsed;
  // Updated rows are independent updates, not a Markov chain; ESS-style
  // diagnostics report N and the acceptance rate instead.
  report["ess_convention"] = "independent-rows";
  report["wall_time_sec"] = upd.wall_time;
  write_file(fs::path(out_dir) / "run_report.json", report.dump(2) + "\n");
  return 0;
}

int cmd_report(const std::vector<std::string>& runs, const std::string& truth_file,
               const std::string& metrics_arg, const std::string& format,
               const std::string& out_file) {
  std::vector<std::string> wanted;
  std::size_t start = 0;
  while (start <= metrics_arg.size() && !metrics_arg.empty()) {
    auto end = metrics_arg.find(',', start);
    if (end == std::string::npos) end = metrics_arg.size();
    wanted.push_back(metrics_arg.substr(start, end - start));
    start = end + 1;
    if (start > metrics_arg.size()) break;
  }
  auto want = [&](const std::string& m) {
    for (const auto& w : wanted) {
      if (w == m) return true;
    }
    return false;
  };
  const bool needs_truth = want("bias") || want("occupancy");
  if (needs_truth && truth_file.empty()) {
    throw UsageError("--truth is required for bias/occupancy metrics");
  }
  std::optional<Truth> truth;
  if (!truth_file.empty()) truth = load_truth(truth_file);

  RunReport report;
  std::optional<std::string> model_id;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const PosteriorArchive a = load_archive(runs[r]);
    if (model_id && *model_id != a.model_id) {
      throw UsageError("all runs must share one model");
    }
    model_id = a.model_id;
    std::string label = fs::path(runs[r]).filename().string();
    double wall = 0.0;
    bool updated_run = false;
    const auto report_path = fs::path(runs[r]) / "run_report.json";
    double accept_rate = 0.0;
    if (fs::exists(report_path)) {
      const auto rr = ordered_json::parse(read_file(report_path));
      label = rr.value("label", label);
      wall = rr.value("wall_time_sec", 0.0);
      updated_run = rr.contains("filter");
      accept_rate = rr.value("accept_rate", 0.0);
    }
    const int rep = static_cast<int>(r);

    for (std::size_t p = 0; p < a.param_names.size(); ++p) {
      std::vector<double> col(static_cast<std::size_t>(a.N));
      for (int j = 0; j < a.N; ++j) col[static_cast<std::size_t>(j)] = a.theta_row(j)[p];
      const std::string& name = a.param_names[p];
      const double post_mean = mean(col);
      if (want("bias")) {
        auto it = truth->theta.find(name);
        if (it == truth->theta.end()) throw UsageError("truth lacks parameter " + name);
        report.push_back({"bias." + name, label, rep, bias_theta(post_mean, it->second)});
      }
      if (want("mcse")) {
        const double se = updated_run ? std::sqrt(variance(col) / a.N) : mcse(col);
        report.push_back({"mcse." + name, label, rep, se});
      }
      if (want("ess") && !updated_run) {
        report.push_back({"ess." + name, label, rep, ess_chain(col)});
      }
      if (want("efficiency") && !updated_run && wall > 0.0) {
        report.push_back({"efficiency." + name, label, rep, ess_chain(col) / wall});
      }
    }
    if (updated_run && (want("ess") || want("efficiency"))) {
      // independent-rows convention: report N and acceptance rate
      report.push_back({"updated_rows", label, rep, static_cast<double>(a.N)});
      report.push_back({"accept_rate", label, rep, accept_rate});
      if (want("efficiency") && wall > 0.0) {
        report.push_back({"efficiency", label, rep, a.N / wall});
      }
    }
    if (want("occupancy")) {
      if (a.model_id != "occupancy") throw UsageError("occupancy metrics need occupancy runs");
      const int R = a.state_dim;
      std::vector<double> psi_hat(static_cast<std::size_t>(a.t), 0.0);
      for (int j = 0; j < a.N; ++j) {
        for (int s = 0; s < a.t; ++s) {
          const auto xs = a.latent_at(j, s);
          double acc = 0.0;
          for (int i = 0; i < R; ++i) acc += xs[static_cast<std::size_t>(i)];
          psi_hat[static_cast<std::size_t>(s)] += acc / R;
        }
      }
      for (auto& v : psi_hat) v /= a.N;
      if (truth->latents.T() < a.t || truth->latents.state_dim != R) {
        throw UsageError("truth latents do not cover the archive window");
      }
      std::vector<double> psi_true(static_cast<std::size_t>(a.t), 0.0);
      for (int s = 0; s < a.t; ++s) {
        double acc = 0.0;
        for (int i = 0; i < R; ++i) acc += truth->latents.row(s)[i];
        psi_true[static_cast<std::size_t>(s)] = acc / R;
      }
      const OccupancyTrend trend = occupancy_corr_bias(psi_hat, psi_true);
      if (trend.correlation) {
        report.push_back({"occupancy.corr", label, rep, *trend.correlation});
      }
      report.push_back({"occupancy.bias_pct", label, rep, trend.bias_pct});
    }
  }

  // Aggregate rows: per (metric, model) median over replicates, replicate -1.
  std::map<std::pair<std::string, std::string>, std::vector<double>> groups;
  for (const auto& row : report) groups[{row.metric, row.model}].push_back(row.value);
  RunReport aggregated = report;
  for (const auto& [key, values] : groups) {
    if (values.size() < 2) continue;
    aggregated.push_back({"median." + key.first, key.second, -1, median(values)});
  }

  const std::string text =
      format == "json" ? report_to_json(aggregated) : report_to_csv(aggregated);
  if (out_file.empty()) {
    std::cout << text;
  } else {
    write_file(out_file, text);
  }
  return 0;
}

int cmd_bench(const std::string& scenario, const std::string& scale, std::uint64_t seed,
              int jobs, const std::string& out_dir) {
  if (scale != "desk") throw UsageError("only --scale desk is supported");
  fs::create_directories(out_dir);
  if (scenario == "sim1") {
    Sim1Options opt;
    opt.seed = seed;
    opt.jobs = jobs;
    const Sim1Result res = run_sim1(opt);
    write_file(fs::path(out_dir) / "sim1_metrics.csv", report_to_csv(res.metrics));
    for (const auto& t : opt.reduced_times) {
      for (const char* lbl : {"BUMC", "AUMC"}) {
        std::cout << lbl << " t=" << t
                  << " median bias a=" << res.median_bias(std::string(lbl) + "/t=" +
                                                          std::to_string(t) + "/a")
                  << " c=" << res.median_bias(std::string(lbl) + "/t=" + std::to_string(t) +
                                              "/c")
                  << "\n";
      }
    }
    std::cout << "BMC median bias a=" << res.median_bias("BMC/a")
              << " c=" << res.median_bias("BMC/c") << "\n";
  } else if (scenario == "sim2") {
    Sim2Options opt;
    opt.seed = seed;
    opt.jobs = jobs;
    const Sim2Result res = run_sim2(opt);
    write_file(fs::path(out_dir) / "sim2_metrics.csv", report_to_csv(res.metrics));
    write_file(fs::path(out_dir) / "sim2_timing.csv", res.timing_csv());
    for (const auto& c : res.cells) {
      std::cout << c.model << " t=" << c.reduced_t << " M=" << c.particles << " corr="
                << (c.correlation ? format_double(*c.correlation) : std::string("NA"))
                << " bias_pct=" << c.bias_pct << " seconds=" << c.seconds << "\n";
    }
  } else {
    throw UsageError("unknown scenario: " + scenario);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"State-space model fitting and posterior updating"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Simulate a dataset with known truth");
  std::string sim_model, sim_params, sim_out;
  int sim_T = 50, sim_sites = 50, sim_visits = 3;
  std::uint64_t sim_seed = 1;
  sim->add_option("--model", sim_model, "lgssm or occupancy")->required();
  sim->add_option("--params", sim_params, "JSON file or inline name=value,... pairs");
  sim->add_option("--T", sim_T, "number of time steps")->required();
  sim->add_option("--seed", sim_seed, "RNG seed");
  sim->add_option("--out", sim_out, "output directory")->required();
  sim->add_option("--sites", sim_sites, "occupancy sites");
  sim->add_option("--visits", sim_visits, "occupancy visits per year");

  // fit
  auto* fit = app.add_subcommand("fit", "Fit a model and write a posterior archive");
  std::string fit_model, fit_data, fit_algo = "mcmc", fit_label, fit_out;
  int fit_iters = 3000, fit_burnin = 1000, fit_thin = 4, fit_chains = 1, fit_particles = 1000;
  int fit_t = 0, fit_sites = 50, fit_visits = 3;
  double fit_delta1 = 0.3, fit_delta2 = 0.3;
  std::uint64_t fit_seed = 1;
  fit->add_option("--model", fit_model, "lgssm or occupancy")->required();
  fit->add_option("--data", fit_data, "dataset directory")->required();
  fit->add_option("--algo", fit_algo, "mcmc, pmcmc-bootstrap or pmcmc-aux");
  fit->add_option("--iters", fit_iters, "MCMC iterations");
  fit->add_option("--burnin", fit_burnin, "burn-in iterations");
  fit->add_option("--thin", fit_thin, "thinning interval");
  fit->add_option("--chains", fit_chains, "number of chains");
  fit->add_option("--particles", fit_particles, "particles for pMCMC");
  fit->add_option("--seed", fit_seed, "RNG seed");
  fit->add_option("--t", fit_t, "fit only the first t observations (reduced model)");
  fit->add_option("--delta1", fit_delta1, "theta1 block step scale");
  fit->add_option("--delta2", fit_delta2, "theta2 block step scale");
  fit->add_option("--label", fit_label, "model label for reports (e.g. BMC, RMC)");
  fit->add_option("--out", fit_out, "archive output directory")->required();
  fit->add_option("--sites", fit_sites, "occupancy sites (else from meta.json)");
  fit->add_option("--visits", fit_visits, "occupancy visits (else from meta.json)");

  // update
  auto* upd = app.add_subcommand("update", "Update an archived fit with new observations");
  std::string upd_archive, upd_new, upd_filter = "bootstrap", upd_label, upd_out;
  int upd_particles = 100, upd_jobs = default_jobs();
  double upd_delta1 = 0.4, upd_delta2 = 0.4;
  std::uint64_t upd_seed = 1;
  upd->add_option("--archive", upd_archive, "posterior archive directory")->required();
  upd->add_option("--new-data", upd_new, "dataset file/dir holding the new observations");
  upd->add_option("--filter", upd_filter, "bootstrap or auxiliary");
  upd->add_option("--particles", upd_particles, "particles M");
  upd->add_option("--delta1", upd_delta1, "theta1 proposal scale");
  upd->add_option("--delta2", upd_delta2, "theta2 proposal scale");
  upd->add_option("--seed", upd_seed, "RNG seed");
  upd->add_option("--jobs", upd_jobs, "worker threads (env SSMUP_JOBS)");
  upd->add_option("--label", upd_label, "model label for reports (default BUMC/AUMC)");
  upd->add_option("--out", upd_out, "output archive directory")->required();

  // report
  auto* rep = app.add_subcommand("report", "Aggregate metrics over runs");
  std::vector<std::string> rep_runs;
  std::string rep_truth, rep_metrics = "bias,mcse,ess,efficiency", rep_format = "csv",
              rep_out;
  rep->add_option("--runs", rep_runs, "archive directories")->required()->expected(-1);
  rep->add_option("--truth", rep_truth, "truth.csv from simulate");
  rep->add_option("--metrics", rep_metrics, "comma list: bias,mcse,ess,efficiency,occupancy");
  rep->add_option("--format", rep_format, "csv or json");
  rep->add_option("--out", rep_out, "output file (default stdout)");

  // bench
  auto* ben = app.add_subcommand("bench", "Run a desk-scale replication scenario");
  std::string ben_scenario, ben_scale = "desk", ben_out = "bench-out";
  std::uint64_t ben_seed = 1;
  int ben_jobs = default_jobs();
  ben->add_option("--scenario", ben_scenario, "sim1 or sim2")->required();
  ben->add_option("--scale", ben_scale, "desk");
  ben->add_option("--seed", ben_seed, "RNG seed");
  ben->add_option("--jobs", ben_jobs, "worker threads (env SSMUP_JOBS)");
  ben->add_option("--out", ben_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (sim->parsed()) {
      return cmd_simulate(sim_model, sim_params, sim_T, sim_seed, sim_out, sim_sites,
                          sim_visits);
    }
    if (fit->parsed()) {
      return cmd_fit(fit_model, fit_data, fit_algo, fit_iters, fit_burnin, fit_thin, fit_chains,
                     fit_particles, fit_seed, fit_t, fit_delta1, fit_delta2, fit_label, fit_out,
                     fit_sites, fit_visits);
    }
    if (upd->parsed()) {
      return cmd_update(upd_archive, upd_new, upd_filter, upd_particles, upd_delta1, upd_delta2,
                        upd_seed, upd_jobs, upd_label, upd_out);
    }
    if (rep->parsed()) {
      return cmd_report(rep_runs, rep_truth, rep_metrics, rep_format, rep_out);
    }
    if (ben->parsed()) {
      return cmd_bench(ben_scenario, ben_scale, ben_seed, ben_jobs, ben_out);
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const CorruptArchive& e) {
    std::cerr << "archive error: " << e.what() << "\n";
    return kExitArchive;
  } catch (const VersionMismatch& e) {
    std::cerr << "archive error: " << e.what() << "\n";
    return kExitArchive;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const Error& e) {
    std::cerr << "inference error: " << e.what() << "\n";
    return kExitInference;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInference;
  }
  return 0;
}
