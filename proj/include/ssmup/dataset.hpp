#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace ssmup {

// One observation row with explicit missingness flags.
struct ObsView {
  std::span<const double> y;
  std::span<const std::uint8_t> missing;  // 1 = missing

  int size() const { return static_cast<int>(y.size()); }
  bool is_missing(int i) const { return missing[static_cast<std::size_t>(i)] != 0; }
  double operator[](int i) const { return y[static_cast<std::size_t>(i)]; }
  bool all_missing() const {
    for (auto m : missing) {
      if (!m) return false;
    }
    return true;
  }
};

// Named covariate arrays of arbitrary rank, stored flat in row-major order.
struct CovariateStore {
  struct Array {
    std::vector<int> shape;
    std::vector<double> data;

    double at(std::span<const int> index) const;
  };
  std::map<std::string, Array> arrays;

  bool empty() const { return arrays.empty(); }
  const Array& get(const std::string& name) const;
};

// Time-indexed observations, T x obs_dim, with per-entry missing flags.
struct Dataset {
  int obs_dim = 1;
  std::vector<double> y;               // T x obs_dim, row-major
  std::vector<std::uint8_t> missing;   // same shape
  CovariateStore covariates;

  int T() const { return obs_dim == 0 ? 0 : static_cast<int>(y.size()) / obs_dim; }
  ObsView row(int t) const;
  void append_row(std::span<const double> values, std::span<const std::uint8_t> miss);

  // Rows [0, t) with the same covariates.
  Dataset head(int t) const;
  // Rows [from, T) with the same covariates.
  Dataset tail(int from) const;
  // Appends the rows of other (obs_dim must match); keeps this->covariates
  // unless other has any, which then replace them.
  Dataset concat(const Dataset& other) const;
};

struct LatentTrajectory {
  int state_dim = 1;
  std::vector<double> x;  // T x state_dim, row-major

  int T() const { return state_dim == 0 ? 0 : static_cast<int>(x.size()) / state_dim; }
  std::span<const double> row(int t) const {
    return {x.data() + static_cast<std::size_t>(t) * state_dim,
            static_cast<std::size_t>(state_dim)};
  }
  std::span<double> row(int t) {
    return {x.data() + static_cast<std::size_t>(t) * state_dim,
            static_cast<std::size_t>(state_dim)};
  }
};

// Wide CSV: header "t,y_1,...,y_k", 1-based t, empty field = missing.
std::string dataset_to_csv(const Dataset& d);
Dataset dataset_from_csv_text(const std::string& text);

// Long CSV used for occupancy data: header "site,visit,year,y"; a missing
// (site, visit, year) row means a missing entry. sites/visits give the wide
// shape (obs_dim = sites * visits).
std::string dataset_to_long_csv(const Dataset& d, int sites, int visits);
Dataset dataset_from_long_csv_text(const std::string& text, int sites, int visits);

// Covariate sidecar: {"name": nested arrays ...}.
std::string covariates_to_json(const CovariateStore& c);
CovariateStore covariates_from_json_text(const std::string& text);

void save_dataset(const Dataset& d, const std::filesystem::path& dir,
                  const std::string& csv_name = "data.csv");
Dataset load_dataset(const std::filesystem::path& dir,
                     const std::string& csv_name = "data.csv");

}  // namespace ssmup
