#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ssmup {

// estimate - truth
double bias_theta(double estimate, double truth);

// mean of (x_hat_i - x_true_i); throws LengthMismatch.
double bias_latent(std::span<const double> x_hat, std::span<const double> x_true);

// Effective sample size of a chain via the initial-positive-sequence
// truncation of the autocorrelation sum. Constant chains have ESS = n by
// convention. Throws TooFewDraws below 10 draws.
double ess_chain(std::span<const double> draws);

// sd(draws) / sqrt(ess_chain(draws)); 0 for constant chains.
double mcse(std::span<const double> draws);

// Batch-means alternative: sd of batch averages over sqrt(batches).
double mcse_batch_means(std::span<const double> draws, int batches = 20);

// ess_chain / wall_time: independent samples per second.
double efficiency(std::span<const double> draws, double wall_time_seconds);

// Column means of an R x T binary occupancy matrix. Throws NonBinary.
std::vector<double> realised_occupancy(std::span<const double> z, int sites, int years);

// Pearson correlation over the window plus the final-year bias in percent.
// The correlation is missing when either series is constant.
struct OccupancyTrend {
  std::optional<double> correlation;
  double bias_pct = 0.0;
};
OccupancyTrend occupancy_corr_bias(std::span<const double> psi_hat,
                                   std::span<const double> psi_true);

double mean(std::span<const double> v);
double variance(std::span<const double> v);  // denominator n - 1
double median(std::vector<double> v);
double pearson(std::span<const double> a, std::span<const double> b);  // throws ZeroVariance

// Long-format metric table and its writers.
struct MetricRow {
  std::string metric;
  std::string model;
  int replicate = 0;
  double value = 0.0;
};
using RunReport = std::vector<MetricRow>;

std::string report_to_csv(const RunReport& report);
std::string report_to_json(const RunReport& report);

// Per-parameter trace export for external plotting: one column per chain.
std::string trace_to_csv(std::span<const double> draws, int chains, int kept_per_chain);

}  // namespace ssmup
