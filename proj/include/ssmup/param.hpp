#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ssmup/distributions.hpp"

namespace ssmup {

enum class ThetaBlock { Theta1, Theta2 };

// One named model parameter with its prior. A negative hyper_sd_index means
// the prior is fixed; otherwise the prior sd is read from that parameter at
// evaluation time (hierarchical normal priors).
struct ParamSpecEntry {
  std::string name;
  DistSpec prior;
  ThetaBlock block = ThetaBlock::Theta1;
  int hyper_sd_index = -1;
};

// Ordered (name, value) parameter vector. Values are addressed by name at
// module boundaries and by index on hot paths after alignment.
class ParamVector {
 public:
  ParamVector() = default;
  ParamVector(std::vector<std::string> names, std::vector<double> values);

  std::size_t size() const { return values_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }
  std::span<const double> span() const { return values_; }

  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  // Throws ParamMismatch when the name is absent.
  double get(std::string_view name) const;
  void set(std::string_view name, double value);

 private:
  std::vector<std::string> names_;
  std::vector<double> values_;
};

// Reorders theta to match the spec's parameter order; throws ParamMismatch if
// the name sets differ. Cheap when already aligned.
std::vector<double> align_params(const std::vector<ParamSpecEntry>& spec,
                                 const ParamVector& theta);

ParamVector named_params(const std::vector<ParamSpecEntry>& spec, std::vector<double> values);

std::vector<std::string> param_names(const std::vector<ParamSpecEntry>& spec);

// Indices of the entries in each proposal block.
std::vector<int> block_indices(const std::vector<ParamSpecEntry>& spec, ThetaBlock block);

}  // namespace ssmup
