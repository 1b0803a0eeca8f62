#pragma once

#include <span>
#include <vector>

#include "ssmup/param.hpp"

namespace ssmup {

// Maps bounded parameters to an unconstrained scale so normal proposals stay
// valid near the bounds. The Jacobian is folded into the prior term of the
// acceptance ratio. Derived from the prior support:
//   unbounded        -> identity
//   (lower, inf)     -> log(theta - lower)
//   (lower, upper)   -> scaled logit
class ParamTransform {
 public:
  enum class Kind { Identity, LogShift, Logit };

  static ParamTransform for_prior(const DistSpec& prior);

  double to_unconstrained(double theta) const;
  double to_constrained(double u) const;
  // log |d theta / d u| evaluated at u.
  double log_jacobian(double u) const;

  Kind kind() const { return kind_; }

 private:
  Kind kind_ = Kind::Identity;
  double lower_ = 0.0;
  double upper_ = 0.0;
};

// Transforms for every entry of a parameter spec.
std::vector<ParamTransform> make_transforms(const std::vector<ParamSpecEntry>& spec);

// Sum of log-Jacobians for a full constrained vector.
double log_jacobian_sum(const std::vector<ParamTransform>& transforms,
                        std::span<const double> theta);

}  // namespace ssmup
