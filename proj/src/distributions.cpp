#include "ssmup/distributions.hpp"

#include <cmath>
#include <limits>

#include "ssmup/errors.hpp"

namespace ssmup {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // ln(sqrt(2*pi))
constexpr double kInvSqrt2 = 0.70710678118654752440;

bool is_nonneg_integer(double x) { return x >= 0.0 && std::floor(x) == x && std::isfinite(x); }

// P(a < Z < b) for standard normal, computed in whichever tail keeps precision.
double std_normal_mass(double a, double b) {
  if (a >= b) return 0.0;
  if (a >= 0.0) return 0.5 * (std::erfc(a * kInvSqrt2) - std::erfc(b * kInvSqrt2));
  if (b <= 0.0) return 0.5 * (std::erfc(-b * kInvSqrt2) - std::erfc(-a * kInvSqrt2));
  return norm_cdf(b) - norm_cdf(a);
}

// Standardised truncated normal draw on (a, b), a < b.
double sample_std_truncnorm(RngStream& rng, double a, double b) {
  if (a == -kInf && b == kInf) return rng.normal();
  if (a == -kInf) return -sample_std_truncnorm(rng, -b, kInf);
  if (b == kInf) {
    if (a <= 0.45) {  // plain rejection keeps acceptance >= ~1/3
      double x;
      do {
        x = rng.normal();
      } while (x < a);
      return x;
    }
    // Robert (1995) translated-exponential rejection for the upper tail.
    const double lam = 0.5 * (a + std::sqrt(a * a + 4.0));
    for (;;) {
      const double x = a - std::log(rng.uniform()) / lam;
      const double d = x - lam;
      if (std::log(rng.uniform()) <= -0.5 * d * d) return x;
    }
  }
  const double mass = std_normal_mass(a, b);
  if (mass > 0.25) {
    double x;
    do {
      x = rng.normal();
    } while (x < a || x > b);
    return x;
  }
  // Narrow or tail interval: uniform proposal against the density mode.
  const double c = (a > 0.0) ? a : (b < 0.0 ? b : 0.0);
  for (;;) {
    const double x = a + (b - a) * rng.uniform();
    if (std::log(rng.uniform()) <= 0.5 * (c * c - x * x)) return x;
  }
}

double sample_poisson(RngStream& rng, double rate) {
  if (rate <= 0.0) return 0.0;
  double total = 0.0;
  // Split large rates so the inversion never underflows exp(-rate).
  while (rate > 500.0) {
    double part = 250.0;
    rate -= part;
    // recurse on the fixed part
    double u = rng.uniform();
    double pmf = std::exp(-part);
    double cdf = pmf;
    double k = 0.0;
    while (u > cdf) {
      k += 1.0;
      pmf *= part / k;
      cdf += pmf;
    }
    total += k;
  }
  double u = rng.uniform();
  double pmf = std::exp(-rate);
  double cdf = pmf;
  double k = 0.0;
  while (u > cdf) {
    k += 1.0;
    pmf *= rate / k;
    cdf += pmf;
  }
  return total + k;
}

double lchoose(double n, double k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

}  // namespace

double norm_logpdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -kLogSqrt2Pi - std::log(sd) - 0.5 * z * z;
}

double norm_cdf(double z) { return 0.5 * std::erfc(-z * kInvSqrt2); }

void validate(const DistSpec& spec) {
  const auto& p = spec.params;
  auto need = [&](std::size_t n) {
    if (p.size() != n) throw InvalidParams("wrong parameter count for distribution");
  };
  switch (spec.family) {
    case DistFamily::Normal:
      need(2);
      if (!(p[1] > 0.0)) throw InvalidParams("Normal: sd must be > 0");
      break;
    case DistFamily::TruncatedNormal:
      need(4);
      if (!(p[1] > 0.0)) throw InvalidParams("TruncatedNormal: sd must be > 0");
      if (!(p[2] < p[3])) throw InvalidParams("TruncatedNormal: lower must be < upper");
      break;
    case DistFamily::HalfNormal:
      need(1);
      if (!(p[0] > 0.0)) throw InvalidParams("HalfNormal: sd must be > 0");
      break;
    case DistFamily::Uniform:
      need(2);
      if (!(p[0] <= p[1])) throw InvalidParams("Uniform: lower must be <= upper");
      break;
    case DistFamily::Bernoulli:
      need(1);
      if (!(p[0] >= 0.0 && p[0] <= 1.0)) throw InvalidParams("Bernoulli: p must be in [0,1]");
      break;
    case DistFamily::Binomial:
      need(2);
      if (!is_nonneg_integer(p[0])) throw InvalidParams("Binomial: trials must be integer >= 0");
      if (!(p[1] >= 0.0 && p[1] <= 1.0)) throw InvalidParams("Binomial: p must be in [0,1]");
      break;
    case DistFamily::Poisson:
      need(1);
      if (!(p[0] >= 0.0)) throw InvalidParams("Poisson: rate must be >= 0");
      break;
  }
}

double sample(const DistSpec& spec, RngStream& rng) {
  validate(spec);
  const auto& p = spec.params;
  switch (spec.family) {
    case DistFamily::Normal:
      return rng.normal(p[0], p[1]);
    case DistFamily::TruncatedNormal: {
      const double a = (p[2] - p[0]) / p[1];
      const double b = (p[3] - p[0]) / p[1];
      return p[0] + p[1] * sample_std_truncnorm(rng, a, b);
    }
    case DistFamily::HalfNormal:
      return sample(DistSpec::truncated_normal(0.0, p[0], 0.0, kInf), rng);
    case DistFamily::Uniform:
      if (p[0] == p[1]) return p[0];
      return p[0] + (p[1] - p[0]) * rng.uniform();
    case DistFamily::Bernoulli:
      return rng.uniform() < p[0] ? 1.0 : 0.0;
    case DistFamily::Binomial: {
      double k = 0.0;
      for (long i = 0; i < static_cast<long>(p[0]); ++i) {
        if (rng.uniform() < p[1]) k += 1.0;
      }
      return k;
    }
    case DistFamily::Poisson:
      return sample_poisson(rng, p[0]);
  }
  throw InvalidParams("unknown distribution family");
}

double log_density(const DistSpec& spec, double value) {
  validate(spec);
  const auto& p = spec.params;
  if (std::isnan(value)) return -kInf;
  switch (spec.family) {
    case DistFamily::Normal:
      return norm_logpdf(value, p[0], p[1]);
    case DistFamily::TruncatedNormal: {
      if (value < p[2] || value > p[3]) return -kInf;
      const double a = (p[2] - p[0]) / p[1];
      const double b = (p[3] - p[0]) / p[1];
      const double mass = std_normal_mass(a, b);
      if (mass <= 0.0) return -kInf;
      return norm_logpdf(value, p[0], p[1]) - std::log(mass);
    }
    case DistFamily::HalfNormal:
      return log_density(DistSpec::truncated_normal(0.0, p[0], 0.0, kInf), value);
    case DistFamily::Uniform:
      if (p[0] == p[1]) return value == p[0] ? kInf : -kInf;
      if (value < p[0] || value > p[1]) return -kInf;
      return -std::log(p[1] - p[0]);
    case DistFamily::Bernoulli:
      if (value == 1.0) return p[0] > 0.0 ? std::log(p[0]) : -kInf;
      if (value == 0.0) return p[0] < 1.0 ? std::log1p(-p[0]) : -kInf;
      return -kInf;
    case DistFamily::Binomial: {
      if (!is_nonneg_integer(value) || value > p[0]) return -kInf;
      const double n = p[0];
      const double k = value;
      const double pr = p[1];
      if (pr == 0.0) return k == 0.0 ? 0.0 : -kInf;
      if (pr == 1.0) return k == n ? 0.0 : -kInf;
      return lchoose(n, k) + k * std::log(pr) + (n - k) * std::log1p(-pr);
    }
    case DistFamily::Poisson: {
      if (!is_nonneg_integer(value)) return -kInf;
      if (p[0] == 0.0) return value == 0.0 ? 0.0 : -kInf;
      return value * std::log(p[0]) - p[0] - std::lgamma(value + 1.0);
    }
  }
  throw InvalidParams("unknown distribution family");
}

double dist_mean(const DistSpec& spec) {
  validate(spec);
  const auto& p = spec.params;
  switch (spec.family) {
    case DistFamily::Normal:
      return p[0];
    case DistFamily::TruncatedNormal: {
      const double a = (p[2] - p[0]) / p[1];
      const double b = (p[3] - p[0]) / p[1];
      const double mass = std_normal_mass(a, b);
      const double phi_a = std::isfinite(a) ? std::exp(-0.5 * a * a - kLogSqrt2Pi) : 0.0;
      const double phi_b = std::isfinite(b) ? std::exp(-0.5 * b * b - kLogSqrt2Pi) : 0.0;
      return p[0] + p[1] * (phi_a - phi_b) / mass;
    }
    case DistFamily::HalfNormal:
      return dist_mean(DistSpec::truncated_normal(0.0, p[0], 0.0, kInf));
    case DistFamily::Uniform:
      return 0.5 * (p[0] + p[1]);
    case DistFamily::Bernoulli:
      return p[0];
    case DistFamily::Binomial:
      return p[0] * p[1];
    case DistFamily::Poisson:
      return p[0];
  }
  throw InvalidParams("unknown distribution family");
}

}  // namespace ssmup
