#include "ssmup/transform.hpp"

#include <cmath>
#include <limits>

namespace ssmup {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

ParamTransform ParamTransform::for_prior(const DistSpec& prior) {
  ParamTransform t;
  double lower = -kInf, upper = kInf;
  switch (prior.family) {
    case DistFamily::Normal:
      break;
    case DistFamily::TruncatedNormal:
      lower = prior.params[2];
      upper = prior.params[3];
      break;
    case DistFamily::HalfNormal:
      lower = 0.0;
      break;
    case DistFamily::Uniform:
      lower = prior.params[0];
      upper = prior.params[1];
      break;
    default:
      break;  // discrete priors are not proposed by random walks
  }
  if (lower == -kInf && upper == kInf) {
    t.kind_ = Kind::Identity;
  } else if (upper == kInf) {
    t.kind_ = Kind::LogShift;
    t.lower_ = lower;
  } else {
    t.kind_ = Kind::Logit;
    t.lower_ = lower;
    t.upper_ = upper;
  }
  return t;
}

double ParamTransform::to_unconstrained(double theta) const {
  switch (kind_) {
    case Kind::Identity:
      return theta;
    case Kind::LogShift:
      return std::log(theta - lower_);
    case Kind::Logit: {
      const double p = (theta - lower_) / (upper_ - lower_);
      return std::log(p) - std::log1p(-p);
    }
  }
  return theta;
}

double ParamTransform::to_constrained(double u) const {
  switch (kind_) {
    case Kind::Identity:
      return u;
    case Kind::LogShift:
      return lower_ + std::exp(u);
    case Kind::Logit: {
      const double s = 1.0 / (1.0 + std::exp(-u));
      return lower_ + (upper_ - lower_) * s;
    }
  }
  return u;
}

double ParamTransform::log_jacobian(double u) const {
  switch (kind_) {
    case Kind::Identity:
      return 0.0;
    case Kind::LogShift:
      return u;
    case Kind::Logit: {
      const double s = 1.0 / (1.0 + std::exp(-u));
      return std::log(upper_ - lower_) + std::log(s) + std::log1p(-s);
    }
  }
  return 0.0;
}

std::vector<ParamTransform> make_transforms(const std::vector<ParamSpecEntry>& spec) {
  std::vector<ParamTransform> out;
  out.reserve(spec.size());
  for (const auto& e : spec) out.push_back(ParamTransform::for_prior(e.prior));
  return out;
}

double log_jacobian_sum(const std::vector<ParamTransform>& transforms,
                        std::span<const double> theta) {
  double s = 0.0;
  for (std::size_t i = 0; i < transforms.size(); ++i) {
    s += transforms[i].log_jacobian(transforms[i].to_unconstrained(theta[i]));
  }
  return s;
}

}  // namespace ssmup
