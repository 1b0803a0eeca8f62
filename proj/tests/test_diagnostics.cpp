#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "ssmup/diagnostics.hpp"
#include "ssmup/errors.hpp"
#include "ssmup/rng.hpp"

using namespace ssmup;

TEST_CASE("bias of point estimates") {
  CHECK(bias_theta(0.5, 0.5) == 0.0);
  CHECK(bias_theta(0.6, 0.5) == doctest::Approx(0.1));
}

TEST_CASE("latent bias is the mean difference") {
  const std::vector<double> x = {1.0, 2.0, 3.0};
  CHECK(bias_latent(x, x) == 0.0);
  const std::vector<double> shifted = {2.0, 3.0, 4.0};
  CHECK(bias_latent(shifted, x) == doctest::Approx(1.0));
  const std::vector<double> shorter = {1.0};
  CHECK_THROWS_AS(bias_latent(shorter, x), LengthMismatch);
}

TEST_CASE("median is invariant to replicate order") {
  std::vector<double> v = {0.3, -0.1, 0.7, 0.2, -0.5};
  const double m1 = median(v);
  std::reverse(v.begin(), v.end());
  CHECK(median(v) == m1);
  std::vector<double> shuffled = {0.7, -0.5, 0.3, 0.2, -0.1};
  CHECK(median(shuffled) == m1);
}

TEST_CASE("iid draws have ESS close to n") {
  RngStream rng(3);
  const int n = 100000;
  std::vector<double> draws(static_cast<std::size_t>(n));
  for (auto& v : draws) v = rng.normal();
  const double ratio = ess_chain(draws) / n;
  CHECK(ratio >= 0.9);
  CHECK(ratio <= 1.1);
}

TEST_CASE("constant chains are degenerate by convention") {
  const std::vector<double> v(50, 2.5);
  CHECK(ess_chain(v) == 50.0);
  CHECK(mcse(v) == 0.0);
}

TEST_CASE("too few draws are rejected") {
  const std::vector<double> v(9, 1.0);
  CHECK_THROWS_AS(ess_chain(v), TooFewDraws);
}

TEST_CASE("AR(1) chains match the closed-form ESS fraction") {
  // ESS/n -> (1 - rho) / (1 + rho) for an AR(1) chain
  const double rho = 0.9;
  const double expect = (1.0 - rho) / (1.0 + rho);
  const int n = 100000;
  const int reps = 20;
  std::vector<double> ratios(static_cast<std::size_t>(reps));
  for (int r = 0; r < reps; ++r) {
    RngStream rng(100 + static_cast<std::uint64_t>(r));
    std::vector<double> draws(static_cast<std::size_t>(n));
    double x = rng.normal();
    const double innov_sd = std::sqrt(1.0 - rho * rho);
    for (auto& v : draws) {
      x = rho * x + innov_sd * rng.normal();
      v = x;
    }
    ratios[static_cast<std::size_t>(r)] = ess_chain(draws) / n;
  }
  double m = 0.0;
  for (double v : ratios) m += v;
  m /= reps;
  double var = 0.0;
  for (double v : ratios) var += (v - m) * (v - m);
  var /= (reps - 1);
  const double se = std::sqrt(var / reps);
  CHECK(std::abs(m - expect) < 3.0 * se);
}

TEST_CASE("mcse scales exactly with powers of two and proportionally otherwise") {
  RngStream rng(7);
  std::vector<double> draws(2000);
  double x = 0.0;
  for (auto& v : draws) {
    x = 0.5 * x + rng.normal();
    v = x;
  }
  const double base = mcse(draws);
  for (double c : {2.0, -2.0, 0.5}) {
    std::vector<double> scaled(draws.size());
    for (std::size_t i = 0; i < draws.size(); ++i) scaled[i] = c * draws[i];
    CHECK(mcse(scaled) == std::abs(c) * base);  // exact for powers of two
  }
  std::vector<double> tripled(draws.size());
  for (std::size_t i = 0; i < draws.size(); ++i) tripled[i] = 3.0 * draws[i];
  CHECK(mcse(tripled) == doctest::Approx(3.0 * base).epsilon(1e-12));
}

TEST_CASE("batch-means mcse agrees with the autocorrelation estimate") {
  RngStream rng(13);
  const int n = 100000;
  std::vector<double> draws(static_cast<std::size_t>(n));
  double x = 0.0;
  const double rho = 0.8;
  const double innov_sd = std::sqrt(1.0 - rho * rho);
  for (auto& v : draws) {
    x = rho * x + innov_sd * rng.normal();
    v = x;
  }
  const double a = mcse(draws);
  const double b = mcse_batch_means(draws, 25);
  // both estimate sd(mean); agree within ~40% on a well-behaved AR(1)
  CHECK(b > 0.6 * a);
  CHECK(b < 1.4 * a);
  CHECK_THROWS_AS(mcse_batch_means(std::vector<double>(10, 1.0), 20), TooFewDraws);
}

TEST_CASE("efficiency is ESS per second") {
  RngStream rng(5);
  std::vector<double> draws(1000);
  for (auto& v : draws) v = rng.normal();
  CHECK(efficiency(draws, 2.0) == doctest::Approx(ess_chain(draws) / 2.0));
  CHECK_THROWS_AS(efficiency(draws, 0.0), InvalidParams);
}

TEST_CASE("realised occupancy is the column mean") {
  // R = 4 sites by T = 2 years, row-major site x year
  const std::vector<double> z = {1, 1, 1, 0, 0, 1, 0, 0};
  const auto psi = realised_occupancy(z, 4, 2);
  REQUIRE(psi.size() == 2);
  CHECK(psi[0] == doctest::Approx(0.5));
  CHECK(psi[1] == doctest::Approx(0.5));

  const std::vector<double> ones(12, 1.0);
  for (double p : realised_occupancy(ones, 3, 4)) CHECK(p == 1.0);

  const std::vector<double> bad = {0.5, 1, 0, 1};
  CHECK_THROWS_AS(realised_occupancy(bad, 2, 2), NonBinary);
}

TEST_CASE("occupancy trend: correlation and percentage bias") {
  const std::vector<double> truth = {0.5, 0.6, 0.7, 0.8};
  const OccupancyTrend same = occupancy_corr_bias(truth, truth);
  REQUIRE(same.correlation.has_value());
  CHECK(*same.correlation == doctest::Approx(1.0));
  CHECK(same.bias_pct == doctest::Approx(0.0));

  std::vector<double> flipped(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) flipped[i] = 1.0 - truth[i];
  const OccupancyTrend anti = occupancy_corr_bias(flipped, truth);
  CHECK(*anti.correlation == doctest::Approx(-1.0));
  CHECK(anti.bias_pct == doctest::Approx((0.2 - 0.8) * 100.0));

  const std::vector<double> flat = {0.5, 0.5, 0.5, 0.5};
  const OccupancyTrend degenerate = occupancy_corr_bias(flat, truth);
  CHECK(!degenerate.correlation.has_value());  // reported as missing
  CHECK(degenerate.bias_pct == doctest::Approx(-30.0));
}

TEST_CASE("report writers produce the long format") {
  const RunReport report = {
      {"bias.a", "BMC", 0, 0.125},
      {"ess.c", "BUMC", 1, 312.0},
  };
  CHECK(report_to_csv(report) ==
        "metric,model,replicate,value\n"
        "bias.a,BMC,0,0.125\n"
        "ess.c,BUMC,1,312\n");
  const std::string json = report_to_json(report);
  CHECK(json.find("\"metric\": \"bias.a\"") != std::string::npos);
  CHECK(json.find("\"value\": 312.0") != std::string::npos);
}

TEST_CASE("trace export lays chains out in columns") {
  const std::vector<double> draws = {1.0, 2.0, 3.0, 10.0, 20.0, 30.0};
  CHECK(trace_to_csv(draws, 2, 3) ==
        "chain_1,chain_2\n"
        "1,10\n"
        "2,20\n"
        "3,30\n");
}
