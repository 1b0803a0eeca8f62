#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "doctest.h"
#include "ssmup/errors.hpp"
#include "ssmup/kalman.hpp"
#include "ssmup/rng.hpp"

using namespace ssmup;

namespace {

Dataset make_series(std::vector<double> ys) {
  Dataset d;
  d.obs_dim = 1;
  d.missing.assign(ys.size(), 0);
  d.y = std::move(ys);
  return d;
}

// Dense-Gaussian oracle pieces for the marginal of y_{1:T}:
//   mean_t = c a^t, cov = c^2 Gamma_x + I with Gamma_x from the MA form.
void lgssm_y_moments(double a, double c, int T, std::vector<double>& mean,
                     std::vector<double>& cov) {
  std::vector<double> coef(static_cast<std::size_t>(T) * T, 0.0);  // x_t on e_k
  mean.assign(static_cast<std::size_t>(T), 0.0);
  for (int t = 1; t <= T; ++t) {
    mean[static_cast<std::size_t>(t - 1)] = c * std::pow(a, t);
    for (int k = 1; k <= t; ++k) {
      coef[static_cast<std::size_t>(t - 1) * T + (k - 1)] = std::pow(a, t - k);
    }
  }
  cov.assign(static_cast<std::size_t>(T) * T, 0.0);
  for (int i = 0; i < T; ++i) {
    for (int j = 0; j < T; ++j) {
      double s = 0.0;
      for (int k = 0; k < T; ++k) {
        s += coef[static_cast<std::size_t>(i) * T + k] * coef[static_cast<std::size_t>(j) * T + k];
      }
      cov[static_cast<std::size_t>(i) * T + j] = c * c * s + (i == j ? 1.0 : 0.0);
    }
  }
}

// Cholesky-based dense MVN log density (oracle, independent of the library).
double dense_mvn_logpdf(std::vector<double> cov, const std::vector<double>& mean,
                        const std::vector<double>& value) {
  const int n = static_cast<int>(mean.size());
  std::vector<double> L(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = cov[static_cast<std::size_t>(i) * n + j];
      for (int k = 0; k < j; ++k) {
        s -= L[static_cast<std::size_t>(i) * n + k] * L[static_cast<std::size_t>(j) * n + k];
      }
      L[static_cast<std::size_t>(i) * n + j] = (i == j) ? std::sqrt(s)
                                                        : s / L[static_cast<std::size_t>(j) * n + j];
    }
  }
  double quad = 0.0, logdet = 0.0;
  std::vector<double> u(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double s = value[static_cast<std::size_t>(i)] - mean[static_cast<std::size_t>(i)];
    for (int k = 0; k < i; ++k) {
      s -= L[static_cast<std::size_t>(i) * n + k] * u[static_cast<std::size_t>(k)];
    }
    u[static_cast<std::size_t>(i)] = s / L[static_cast<std::size_t>(i) * n + i];
    quad += u[static_cast<std::size_t>(i)] * u[static_cast<std::size_t>(i)];
    logdet += 2.0 * std::log(L[static_cast<std::size_t>(i) * n + i]);
  }
  return -0.5 * (n * std::log(2.0 * M_PI) + logdet + quad);
}

// Gaussian conditioning oracle: E[x_t | y], Var[x_t | y] from the joint of
// (x_t, y_{1:T}) built out of the MA representation.
void dense_smoother(double a, double c, const std::vector<double>& y, int t,
                    double& cond_mean, double& cond_var) {
  const int T = static_cast<int>(y.size());
  std::vector<double> coef(static_cast<std::size_t>(T) * T, 0.0);
  for (int s = 1; s <= T; ++s) {
    for (int k = 1; k <= s; ++k) {
      coef[static_cast<std::size_t>(s - 1) * T + (k - 1)] = std::pow(a, s - k);
    }
  }
  auto cov_xx = [&](int i, int j) {
    double s = 0.0;
    for (int k = 0; k < T; ++k) {
      s += coef[static_cast<std::size_t>(i) * T + k] * coef[static_cast<std::size_t>(j) * T + k];
    }
    return s;
  };
  // y covariance and cross covariance
  std::vector<double> Syy(static_cast<std::size_t>(T) * T);
  std::vector<double> sxy(static_cast<std::size_t>(T));
  for (int i = 0; i < T; ++i) {
    for (int j = 0; j < T; ++j) {
      Syy[static_cast<std::size_t>(i) * T + j] = c * c * cov_xx(i, j) + (i == j ? 1.0 : 0.0);
    }
    sxy[static_cast<std::size_t>(i)] = c * cov_xx(t, i);
  }
  // Solve Syy w = sxy and Syy r = (y - mean_y) by Gaussian elimination.
  std::vector<double> A(Syy);
  std::vector<double> w(sxy);
  std::vector<double> resid(static_cast<std::size_t>(T));
  for (int i = 0; i < T; ++i) {
    resid[static_cast<std::size_t>(i)] = y[static_cast<std::size_t>(i)] - c * std::pow(a, i + 1);
  }
  // two right-hand sides
  std::vector<double> rhs(2 * static_cast<std::size_t>(T));
  for (int i = 0; i < T; ++i) {
    rhs[static_cast<std::size_t>(i)] = w[static_cast<std::size_t>(i)];
    rhs[static_cast<std::size_t>(T + i)] = resid[static_cast<std::size_t>(i)];
  }
  for (int col = 0; col < T; ++col) {
    int pivot = col;
    for (int r2 = col + 1; r2 < T; ++r2) {
      if (std::abs(A[static_cast<std::size_t>(r2) * T + col]) >
          std::abs(A[static_cast<std::size_t>(pivot) * T + col])) {
        pivot = r2;
      }
    }
    for (int k = 0; k < T; ++k) {
      std::swap(A[static_cast<std::size_t>(col) * T + k], A[static_cast<std::size_t>(pivot) * T + k]);
    }
    std::swap(rhs[static_cast<std::size_t>(col)], rhs[static_cast<std::size_t>(pivot)]);
    std::swap(rhs[static_cast<std::size_t>(T + col)], rhs[static_cast<std::size_t>(T + pivot)]);
    for (int r2 = 0; r2 < T; ++r2) {
      if (r2 == col) continue;
      const double f = A[static_cast<std::size_t>(r2) * T + col] /
                       A[static_cast<std::size_t>(col) * T + col];
      for (int k = 0; k < T; ++k) {
        A[static_cast<std::size_t>(r2) * T + k] -= f * A[static_cast<std::size_t>(col) * T + k];
      }
      rhs[static_cast<std::size_t>(r2)] -= f * rhs[static_cast<std::size_t>(col)];
      rhs[static_cast<std::size_t>(T + r2)] -= f * rhs[static_cast<std::size_t>(T + col)];
    }
  }
  std::vector<double> wsol(static_cast<std::size_t>(T)), rsol(static_cast<std::size_t>(T));
  for (int i = 0; i < T; ++i) {
    wsol[static_cast<std::size_t>(i)] =
        rhs[static_cast<std::size_t>(i)] / A[static_cast<std::size_t>(i) * T + i];
    rsol[static_cast<std::size_t>(i)] =
        rhs[static_cast<std::size_t>(T + i)] / A[static_cast<std::size_t>(i) * T + i];
  }
  double dot_mean = 0.0, dot_var = 0.0;
  for (int i = 0; i < T; ++i) {
    dot_mean += sxy[static_cast<std::size_t>(i)] * rsol[static_cast<std::size_t>(i)];
    dot_var += sxy[static_cast<std::size_t>(i)] * wsol[static_cast<std::size_t>(i)];
  }
  cond_mean = std::pow(a, t + 1) + dot_mean;
  cond_var = cov_xx(t, t) - dot_var;
}

}  // namespace

TEST_CASE("one-step marginal: y_1 ~ N(c a, c^2 + 1)") {
  for (double c : {1.0, -0.7, 2.3}) {
    for (double a : {0.5, -0.2}) {
      const Dataset y = make_series({0.4});
      const double expect = norm_logpdf(0.4, c * a, std::sqrt(c * c + 1.0));
      CHECK(kalman_loglik(a, c, y) == doctest::Approx(expect).epsilon(1e-12));
    }
  }
}

TEST_CASE("T=3 log likelihood matches dense Gaussian algebra") {
  const Dataset y = make_series({0.1, -0.2, 0.3});
  std::vector<double> mean, cov;
  lgssm_y_moments(0.5, 1.0, 3, mean, cov);
  const double oracle = dense_mvn_logpdf(cov, mean, {0.1, -0.2, 0.3});
  CHECK(kalman_loglik(0.5, 1.0, y) == doctest::Approx(oracle).epsilon(1e-10));
}

TEST_CASE("a = c = 0 gives independent standard normal observations") {
  const Dataset y = make_series({0.3, -1.2, 0.5, 2.0});
  double expect = 0.0;
  for (double v : y.y) expect += norm_logpdf(v, 0.0, 1.0);
  CHECK(kalman_loglik(0.0, 0.0, y) == doctest::Approx(expect).epsilon(1e-13));
}

TEST_CASE("property: loglik equals the dense MVN density for all T <= 6") {
  RngStream rng(2024);
  for (int rep = 0; rep < 300; ++rep) {
    const int T = 1 + static_cast<int>(rng.next_u64() % 6);
    const double a = rng.normal(0.0, 0.8);
    const double c = rng.normal(0.0, 1.2);
    std::vector<double> ys(static_cast<std::size_t>(T));
    for (auto& v : ys) v = rng.normal(0.0, 2.0);
    std::vector<double> mean, cov;
    lgssm_y_moments(a, c, T, mean, cov);
    const double oracle = dense_mvn_logpdf(cov, mean, ys);
    const Dataset y = make_series(ys);
    CHECK(kalman_loglik(a, c, y) == doctest::Approx(oracle).epsilon(1e-8));
  }
}

TEST_CASE("smoother with c = 0 returns the prior means, independent of y") {
  const double a = 0.6;
  const Dataset y1 = make_series({5.0, -3.0, 2.0, 1.0});
  const Dataset y2 = make_series({0.0, 0.0, 0.0, 0.0});
  const SmootherResult s1 = kalman_smoother(a, 0.0, y1);
  const SmootherResult s2 = kalman_smoother(a, 0.0, y2);
  for (int t = 0; t < 4; ++t) {
    CHECK(s1.mean[static_cast<std::size_t>(t)] ==
          doctest::Approx(std::pow(a, t + 1)).epsilon(1e-12));
    CHECK(s1.mean[static_cast<std::size_t>(t)] ==
          doctest::Approx(s2.mean[static_cast<std::size_t>(t)]).epsilon(1e-13));
  }
}

TEST_CASE("smoother moments match dense Gaussian conditioning at T=3") {
  const std::vector<double> ys = {0.1, -0.2, 0.3};
  const Dataset y = make_series(ys);
  const SmootherResult s = kalman_smoother(0.5, 1.0, y);
  for (int t = 0; t < 3; ++t) {
    double m, v;
    dense_smoother(0.5, 1.0, ys, t, m, v);
    CHECK(s.mean[static_cast<std::size_t>(t)] == doctest::Approx(m).epsilon(1e-10));
    CHECK(s.variance[static_cast<std::size_t>(t)] == doctest::Approx(v).epsilon(1e-10));
  }
}

TEST_CASE("smoothing never increases the variance over filtering") {
  RngStream rng(5);
  std::vector<double> ys(12);
  for (auto& v : ys) v = rng.normal(0.0, 1.5);
  const SmootherResult s = kalman_smoother(0.7, 1.3, make_series(ys));
  for (std::size_t t = 0; t < ys.size(); ++t) {
    CHECK(s.variance[t] <= s.filter_variance[t] + 1e-12);
  }
}

TEST_CASE("oracle rejects multivariate or incomplete data") {
  Dataset wide;
  wide.obs_dim = 2;
  wide.y = {0.0, 0.0};
  wide.missing = {0, 0};
  CHECK_THROWS_AS(kalman_loglik(0.5, 1.0, wide), NonUnivariate);

  Dataset gappy = make_series({0.1, 0.2});
  gappy.missing[1] = 1;
  CHECK_THROWS_AS(kalman_loglik(0.5, 1.0, gappy), InvalidParams);
}

TEST_CASE("grid posterior: flat prior on a single point is the whole mass") {
  const Dataset y = make_series({0.2, 0.4});
  const GridPosterior g = grid_posterior(y, {0.5}, {1.0}, DistSpec::uniform(0.0, 1.0),
                                         DistSpec::uniform(0.0, 2.0));
  REQUIRE(g.prob.size() == 1);
  CHECK(g.prob[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(g.mean_a() == doctest::Approx(0.5));
  CHECK(g.mean_c() == doctest::Approx(1.0));
}

TEST_CASE("grid posterior is self-convergent under refinement") {
  RngStream rng(31);
  std::vector<double> ys(20);
  double x = 0.5 + rng.normal();
  for (auto& v : ys) {
    v = x + rng.normal();
    x = 0.5 * x + rng.normal();
  }
  const Dataset y = make_series(ys);
  const DistSpec prior = DistSpec::normal(0.0, 10.0);
  // c-grid restricted to the positive sign mode; the (c, x) -> (-c, -x)
  // near-symmetry makes the full posterior bimodal in c.
  const GridPosterior coarse =
      grid_posterior(y, linspace(-1.5, 2.5, 100), linspace(0.05, 2.5, 100), prior, prior);
  const GridPosterior fine =
      grid_posterior(y, linspace(-1.5, 2.5, 200), linspace(0.05, 2.5, 200), prior, prior);
  CHECK(std::abs(coarse.mean_a() - fine.mean_a()) < 1e-3);
  CHECK(std::abs(coarse.mean_c() - fine.mean_c()) < 1e-3);
}
