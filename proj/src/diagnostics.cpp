#include "ssmup/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nlohmann/json.hpp"
#include "ssmup/errors.hpp"
#include "ssmup/util.hpp"

namespace ssmup {

double bias_theta(double estimate, double truth) { return estimate - truth; }

double bias_latent(std::span<const double> x_hat, std::span<const double> x_true) {
  if (x_hat.size() != x_true.size() || x_hat.empty()) {
    throw LengthMismatch("bias_latent requires equal nonempty lengths");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < x_hat.size(); ++i) s += x_hat[i] - x_true[i];
  return s / static_cast<double>(x_hat.size());
}

double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double variance(std::span<const double> v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

double median(std::vector<double> v) {
  if (v.empty()) throw LengthMismatch("median of empty vector");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw LengthMismatch("correlation needs two equal-length series");
  }
  const double ma = mean(a), mb = mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) throw ZeroVariance("correlation undefined for constant series");
  return sab / std::sqrt(saa * sbb);
}

double ess_chain(std::span<const double> draws) {
  const std::size_t n = draws.size();
  if (n < 10) throw TooFewDraws("chain ESS needs at least 10 draws");
  const double m = mean(draws);
  double gamma0 = 0.0;
  for (double x : draws) gamma0 += (x - m) * (x - m);
  gamma0 /= static_cast<double>(n);
  if (gamma0 == 0.0) return static_cast<double>(n);  // constant chain, by convention

  auto gamma = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) s += (draws[i] - m) * (draws[i + lag] - m);
    return s / static_cast<double>(n);
  };

  // Geyer's initial positive sequence: sum paired autocovariances until a
  // pair goes non-positive.
  double tau_sum = 0.0;
  for (std::size_t k = 1; 2 * k < n; ++k) {
    const double pair = gamma(2 * k - 1) + gamma(2 * k);
    if (pair <= 0.0) break;
    tau_sum += pair;
  }
  const double iat = 1.0 + 2.0 * tau_sum / gamma0;
  const double ess = static_cast<double>(n) / std::max(iat, 1e-12);
  return std::min(ess, static_cast<double>(n));
}

double mcse(std::span<const double> draws) {
  const double sd = std::sqrt(variance(draws));
  if (sd == 0.0) return 0.0;
  return sd / std::sqrt(ess_chain(draws));
}

double mcse_batch_means(std::span<const double> draws, int batches) {
  if (batches < 2) throw InvalidParams("batch means need at least 2 batches");
  const std::size_t n = draws.size();
  if (n < static_cast<std::size_t>(2 * batches)) {
    throw TooFewDraws("not enough draws for the requested batch count");
  }
  const std::size_t len = n / static_cast<std::size_t>(batches);
  std::vector<double> means(static_cast<std::size_t>(batches), 0.0);
  for (int b = 0; b < batches; ++b) {
    double s = 0.0;
    for (std::size_t i = 0; i < len; ++i) s += draws[static_cast<std::size_t>(b) * len + i];
    means[static_cast<std::size_t>(b)] = s / static_cast<double>(len);
  }
  return std::sqrt(variance(means) / static_cast<double>(batches));
}

double efficiency(std::span<const double> draws, double wall_time_seconds) {
  if (!(wall_time_seconds > 0.0)) throw InvalidParams("wall time must be positive");
  return ess_chain(draws) / wall_time_seconds;
}

std::vector<double> realised_occupancy(std::span<const double> z, int sites, int years) {
  if (sites < 1 || years < 1 ||
      z.size() != static_cast<std::size_t>(sites) * static_cast<std::size_t>(years)) {
    throw LengthMismatch("occupancy matrix shape mismatch");
  }
  std::vector<double> psi(static_cast<std::size_t>(years), 0.0);
  for (int i = 0; i < sites; ++i) {
    for (int t = 0; t < years; ++t) {
      const double v = z[static_cast<std::size_t>(i) * years + t];
      if (v != 0.0 && v != 1.0) throw NonBinary("occupancy states must be 0 or 1");
      psi[static_cast<std::size_t>(t)] += v;
    }
  }
  for (auto& p : psi) p /= static_cast<double>(sites);
  return psi;
}

OccupancyTrend occupancy_corr_bias(std::span<const double> psi_hat,
                                   std::span<const double> psi_true) {
  if (psi_hat.size() != psi_true.size() || psi_hat.empty()) {
    throw LengthMismatch("occupancy series must have equal nonempty lengths");
  }
  OccupancyTrend out;
  out.bias_pct = (psi_hat.back() - psi_true.back()) * 100.0;
  if (psi_hat.size() >= 2) {
    try {
      out.correlation = pearson(psi_hat, psi_true);
    } catch (const ZeroVariance&) {
      out.correlation = std::nullopt;  // reported as missing
    }
  }
  return out;
}

std::string report_to_csv(const RunReport& report) {
  std::ostringstream out;
  out << "metric,model,replicate,value\n";
  for (const auto& r : report) {
    out << r.metric << "," << r.model << "," << r.replicate << "," << format_double(r.value)
        << "\n";
  }
  return out.str();
}

std::string report_to_json(const RunReport& report) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& r : report) {
    nlohmann::ordered_json row;
    row["metric"] = r.metric;
    row["model"] = r.model;
    row["replicate"] = r.replicate;
    row["value"] = r.value;
    arr.push_back(std::move(row));
  }
  return arr.dump(2) + "\n";
}

std::string trace_to_csv(std::span<const double> draws, int chains, int kept_per_chain) {
  std::ostringstream out;
  for (int c = 0; c < chains; ++c) {
    if (c) out << ",";
    out << "chain_" << (c + 1);
  }
  out << "\n";
  for (int i = 0; i < kept_per_chain; ++i) {
    for (int c = 0; c < chains; ++c) {
      if (c) out << ",";
      out << format_double(draws[static_cast<std::size_t>(c) * kept_per_chain + i]);
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace ssmup
