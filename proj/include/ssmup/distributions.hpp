#pragma once

#include <vector>

#include "ssmup/rng.hpp"

namespace ssmup {

enum class DistFamily {
  Normal,           // params: mean, sd
  TruncatedNormal,  // params: mean, sd, lower, upper (+-inf allowed)
  HalfNormal,       // params: sd  (== TruncatedNormal(0, sd, 0, inf))
  Uniform,          // params: lower, upper
  Bernoulli,        // params: p
  Binomial,         // params: trials, p
  Poisson,          // params: rate
};

struct DistSpec {
  DistFamily family;
  std::vector<double> params;

  static DistSpec normal(double mean, double sd) { return {DistFamily::Normal, {mean, sd}}; }
  static DistSpec truncated_normal(double mean, double sd, double lower, double upper) {
    return {DistFamily::TruncatedNormal, {mean, sd, lower, upper}};
  }
  static DistSpec half_normal(double sd) { return {DistFamily::HalfNormal, {sd}}; }
  static DistSpec uniform(double lower, double upper) {
    return {DistFamily::Uniform, {lower, upper}};
  }
  static DistSpec bernoulli(double p) { return {DistFamily::Bernoulli, {p}}; }
  static DistSpec binomial(double trials, double p) {
    return {DistFamily::Binomial, {trials, p}};
  }
  static DistSpec poisson(double rate) { return {DistFamily::Poisson, {rate}}; }
};

// Throws InvalidParams if the family invariants are violated.
void validate(const DistSpec& spec);

double sample(const DistSpec& spec, RngStream& rng);

// log f(value); -inf outside the support, never NaN.
double log_density(const DistSpec& spec, double value);

// Mean of the distribution (exact closed forms); used for deterministic
// chain initialisation.
double dist_mean(const DistSpec& spec);

// Standard normal helpers shared with the Kalman oracle.
double norm_logpdf(double x, double mean, double sd);
double norm_cdf(double z);  // standard normal Phi

}  // namespace ssmup
