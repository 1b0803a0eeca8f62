#pragma once

#include <vector>

#include "ssmup/dataset.hpp"
#include "ssmup/distributions.hpp"

namespace ssmup {

// Exact inference for the unit-variance linear Gaussian model
//   x_1 ~ N(a, 1), x_t ~ N(a x_{t-1}, 1), y_t ~ N(c x_t, 1).
// Ground truth for every stochastic component that touches the LGSSM.

// Exact log p(y_{1:T} | a, c) by the prediction-error decomposition.
// Requires univariate data without missing entries.
double kalman_loglik(double a, double c, const Dataset& y);

struct SmootherResult {
  std::vector<double> mean;      // E[x_t | y_{1:T}]
  std::vector<double> variance;  // Var[x_t | y_{1:T}]
  std::vector<double> filter_mean;
  std::vector<double> filter_variance;
};

SmootherResult kalman_smoother(double a, double c, const Dataset& y);

struct GridPosterior {
  std::vector<double> a_grid;
  std::vector<double> c_grid;
  std::vector<double> prob;  // len(a_grid) x len(c_grid), sums to 1

  double mean_a() const;
  double mean_c() const;
  double sd_a() const;
  double sd_c() const;
};

// Normalised table proportional to exp(kalman_loglik(a, c, y)) * prior(a) * prior(c).
GridPosterior grid_posterior(const Dataset& y, const std::vector<double>& a_grid,
                             const std::vector<double>& c_grid, const DistSpec& prior_a,
                             const DistSpec& prior_c);

std::vector<double> linspace(double lo, double hi, int n);

}  // namespace ssmup
