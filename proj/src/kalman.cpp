#include "ssmup/kalman.hpp"

#include <cmath>

#include "ssmup/errors.hpp"
#include "ssmup/util.hpp"

namespace ssmup {

namespace {

struct FilterPass {
  std::vector<double> m_pred, p_pred, m_filt, p_filt;
  double loglik = 0.0;
};

FilterPass run_filter_pass(double a, double c, const Dataset& y) {
  if (y.obs_dim != 1) throw NonUnivariate("Kalman oracle requires univariate observations");
  const int T = y.T();
  if (T < 1) throw LengthMismatch("Kalman oracle requires T >= 1");
  FilterPass f;
  f.m_pred.resize(T);
  f.p_pred.resize(T);
  f.m_filt.resize(T);
  f.p_filt.resize(T);
  for (int t = 0; t < T; ++t) {
    if (y.row(t).is_missing(0)) {
      throw InvalidParams("Kalman oracle requires complete data (no missing entries)");
    }
    const double m = (t == 0) ? a : a * f.m_filt[t - 1];
    const double p = (t == 0) ? 1.0 : a * a * f.p_filt[t - 1] + 1.0;
    const double s = c * c * p + 1.0;
    const double resid = y.row(t)[0] - c * m;
    f.loglik += norm_logpdf(resid, 0.0, std::sqrt(s));
    const double gain = p * c / s;
    f.m_pred[t] = m;
    f.p_pred[t] = p;
    f.m_filt[t] = m + gain * resid;
    f.p_filt[t] = (1.0 - gain * c) * p;
  }
  return f;
}

}  // namespace

double kalman_loglik(double a, double c, const Dataset& y) {
  return run_filter_pass(a, c, y).loglik;
}

SmootherResult kalman_smoother(double a, double c, const Dataset& y) {
  const FilterPass f = run_filter_pass(a, c, y);
  const int T = y.T();
  SmootherResult out;
  out.filter_mean = f.m_filt;
  out.filter_variance = f.p_filt;
  out.mean.resize(T);
  out.variance.resize(T);
  out.mean[T - 1] = f.m_filt[T - 1];
  out.variance[T - 1] = f.p_filt[T - 1];
  for (int t = T - 2; t >= 0; --t) {
    const double gain = f.p_filt[t] * a / f.p_pred[t + 1];
    out.mean[t] = f.m_filt[t] + gain * (out.mean[t + 1] - f.m_pred[t + 1]);
    out.variance[t] =
        f.p_filt[t] + gain * gain * (out.variance[t + 1] - f.p_pred[t + 1]);
  }
  return out;
}

double GridPosterior::mean_a() const {
  double m = 0.0;
  const std::size_t nc = c_grid.size();
  for (std::size_t i = 0; i < a_grid.size(); ++i) {
    for (std::size_t j = 0; j < nc; ++j) m += a_grid[i] * prob[i * nc + j];
  }
  return m;
}

double GridPosterior::mean_c() const {
  double m = 0.0;
  const std::size_t nc = c_grid.size();
  for (std::size_t i = 0; i < a_grid.size(); ++i) {
    for (std::size_t j = 0; j < nc; ++j) m += c_grid[j] * prob[i * nc + j];
  }
  return m;
}

double GridPosterior::sd_a() const {
  const double m = mean_a();
  double v = 0.0;
  const std::size_t nc = c_grid.size();
  for (std::size_t i = 0; i < a_grid.size(); ++i) {
    for (std::size_t j = 0; j < nc; ++j) v += (a_grid[i] - m) * (a_grid[i] - m) * prob[i * nc + j];
  }
  return std::sqrt(v);
}

double GridPosterior::sd_c() const {
  const double m = mean_c();
  double v = 0.0;
  const std::size_t nc = c_grid.size();
  for (std::size_t i = 0; i < a_grid.size(); ++i) {
    for (std::size_t j = 0; j < nc; ++j) v += (c_grid[j] - m) * (c_grid[j] - m) * prob[i * nc + j];
  }
  return std::sqrt(v);
}

GridPosterior grid_posterior(const Dataset& y, const std::vector<double>& a_grid,
                             const std::vector<double>& c_grid, const DistSpec& prior_a,
                             const DistSpec& prior_c) {
  GridPosterior g;
  g.a_grid = a_grid;
  g.c_grid = c_grid;
  g.prob.resize(a_grid.size() * c_grid.size());
  std::vector<double> logp(g.prob.size());
  for (std::size_t i = 0; i < a_grid.size(); ++i) {
    for (std::size_t j = 0; j < c_grid.size(); ++j) {
      logp[i * c_grid.size() + j] = kalman_loglik(a_grid[i], c_grid[j], y) +
                                    log_density(prior_a, a_grid[i]) +
                                    log_density(prior_c, c_grid[j]);
    }
  }
  const double norm = logsumexp(logp);
  for (std::size_t k = 0; k < logp.size(); ++k) g.prob[k] = std::exp(logp[k] - norm);
  return g;
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> out(static_cast<std::size_t>(n));
  if (n == 1) {
    out[0] = 0.5 * (lo + hi);
    return out;
  }
  for (int i = 0; i < n; ++i) out[i] = lo + (hi - lo) * i / (n - 1);
  return out;
}

}  // namespace ssmup
