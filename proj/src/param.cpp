#include "ssmup/param.hpp"

#include <algorithm>

#include "ssmup/errors.hpp"

namespace ssmup {

ParamVector::ParamVector(std::vector<std::string> names, std::vector<double> values)
    : names_(std::move(names)), values_(std::move(values)) {
  if (names_.size() != values_.size()) {
    throw ParamMismatch("parameter names and values differ in length");
  }
}

double ParamVector::get(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return values_[i];
  }
  throw ParamMismatch("unknown parameter: " + std::string(name));
}

void ParamVector::set(std::string_view name, double value) {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) {
      values_[i] = value;
      return;
    }
  }
  throw ParamMismatch("unknown parameter: " + std::string(name));
}

std::vector<double> align_params(const std::vector<ParamSpecEntry>& spec,
                                 const ParamVector& theta) {
  if (theta.size() != spec.size()) {
    throw ParamMismatch("parameter vector has wrong length for this model");
  }
  bool aligned = true;
  for (std::size_t i = 0; i < spec.size(); ++i) {
    if (theta.names()[i] != spec[i].name) {
      aligned = false;
      break;
    }
  }
  if (aligned) return theta.values();
  std::vector<double> out(spec.size());
  for (std::size_t i = 0; i < spec.size(); ++i) out[i] = theta.get(spec[i].name);
  return out;
}

ParamVector named_params(const std::vector<ParamSpecEntry>& spec, std::vector<double> values) {
  return ParamVector(param_names(spec), std::move(values));
}

std::vector<std::string> param_names(const std::vector<ParamSpecEntry>& spec) {
  std::vector<std::string> names;
  names.reserve(spec.size());
  for (const auto& e : spec) names.push_back(e.name);
  return names;
}

std::vector<int> block_indices(const std::vector<ParamSpecEntry>& spec, ThetaBlock block) {
  std::vector<int> idx;
  for (std::size_t i = 0; i < spec.size(); ++i) {
    if (spec[i].block == block) idx.push_back(static_cast<int>(i));
  }
  return idx;
}

}  // namespace ssmup
