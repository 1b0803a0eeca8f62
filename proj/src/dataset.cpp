#include "ssmup/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nlohmann/json.hpp"
#include "ssmup/errors.hpp"
#include "ssmup/util.hpp"

namespace ssmup {

using ordered_json = nlohmann::ordered_json;

double CovariateStore::Array::at(std::span<const int> index) const {
  if (index.size() != shape.size()) throw ShapeMismatch("covariate index rank mismatch");
  std::size_t flat = 0;
  for (std::size_t d = 0; d < shape.size(); ++d) {
    if (index[d] < 0 || index[d] >= shape[d]) throw ShapeMismatch("covariate index out of range");
    flat = flat * static_cast<std::size_t>(shape[d]) + static_cast<std::size_t>(index[d]);
  }
  return data[flat];
}

const CovariateStore::Array& CovariateStore::get(const std::string& name) const {
  auto it = arrays.find(name);
  if (it == arrays.end()) throw ShapeMismatch("missing covariate: " + name);
  return it->second;
}

ObsView Dataset::row(int t) const {
  const auto off = static_cast<std::size_t>(t) * obs_dim;
  return {{y.data() + off, static_cast<std::size_t>(obs_dim)},
          {missing.data() + off, static_cast<std::size_t>(obs_dim)}};
}

void Dataset::append_row(std::span<const double> values, std::span<const std::uint8_t> miss) {
  if (static_cast<int>(values.size()) != obs_dim || miss.size() != values.size()) {
    throw ShapeMismatch("observation row has wrong width");
  }
  y.insert(y.end(), values.begin(), values.end());
  missing.insert(missing.end(), miss.begin(), miss.end());
}

Dataset Dataset::head(int t) const {
  if (t < 0 || t > T()) throw LengthMismatch("head length out of range");
  Dataset out;
  out.obs_dim = obs_dim;
  out.y.assign(y.begin(), y.begin() + static_cast<std::size_t>(t) * obs_dim);
  out.missing.assign(missing.begin(), missing.begin() + static_cast<std::size_t>(t) * obs_dim);
  out.covariates = covariates;
  return out;
}

Dataset Dataset::tail(int from) const {
  if (from < 0 || from > T()) throw LengthMismatch("tail start out of range");
  Dataset out;
  out.obs_dim = obs_dim;
  out.y.assign(y.begin() + static_cast<std::size_t>(from) * obs_dim, y.end());
  out.missing.assign(missing.begin() + static_cast<std::size_t>(from) * obs_dim, missing.end());
  out.covariates = covariates;
  return out;
}

Dataset Dataset::concat(const Dataset& other) const {
  if (other.obs_dim != obs_dim) throw ShapeMismatch("cannot concat datasets of different width");
  Dataset out = *this;
  out.y.insert(out.y.end(), other.y.begin(), other.y.end());
  out.missing.insert(out.missing.end(), other.missing.begin(), other.missing.end());
  if (!other.covariates.empty()) out.covariates = other.covariates;
  return out;
}

std::string dataset_to_csv(const Dataset& d) {
  std::ostringstream out;
  out << "t";
  for (int k = 1; k <= d.obs_dim; ++k) out << ",y_" << k;
  out << "\n";
  for (int t = 0; t < d.T(); ++t) {
    out << (t + 1);
    const auto r = d.row(t);
    for (int k = 0; k < d.obs_dim; ++k) {
      out << ",";
      if (!r.is_missing(k)) out << format_double(r[k]);
    }
    out << "\n";
  }
  return out.str();
}

Dataset dataset_from_csv_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty dataset CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv_line(line);
  if (header.empty() || header[0] != "t") throw IoError("dataset CSV must start with 't' column");
  const int obs_dim = static_cast<int>(header.size()) - 1;
  if (obs_dim < 1) throw IoError("dataset CSV has no observation columns");

  // Rows carry absolute 1-based time indices; gaps become missing rows, so a
  // file holding only "new" observations keeps its time alignment.
  std::vector<std::pair<int, std::vector<std::string>>> rows;
  int max_t = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (static_cast<int>(fields.size()) != obs_dim + 1) {
      throw IoError("dataset CSV row has wrong field count");
    }
    const int t = static_cast<int>(parse_double(fields[0]));
    if (t < 1) throw IoError("dataset CSV time indices must be >= 1");
    max_t = std::max(max_t, t);
    rows.emplace_back(t, std::move(fields));
  }
  Dataset d;
  d.obs_dim = obs_dim;
  d.y.assign(static_cast<std::size_t>(max_t) * obs_dim, 0.0);
  d.missing.assign(static_cast<std::size_t>(max_t) * obs_dim, 1);
  for (const auto& [t, fields] : rows) {
    for (int k = 1; k <= obs_dim; ++k) {
      const std::size_t off = static_cast<std::size_t>(t - 1) * obs_dim + (k - 1);
      if (!fields[static_cast<std::size_t>(k)].empty()) {
        d.y[off] = parse_double(fields[static_cast<std::size_t>(k)]);
        d.missing[off] = 0;
      }
    }
  }
  return d;
}

std::string dataset_to_long_csv(const Dataset& d, int sites, int visits) {
  if (sites * visits != d.obs_dim) throw ShapeMismatch("sites*visits must equal obs_dim");
  std::ostringstream out;
  out << "site,visit,year,y\n";
  for (int t = 0; t < d.T(); ++t) {
    const auto r = d.row(t);
    for (int i = 0; i < sites; ++i) {
      for (int j = 0; j < visits; ++j) {
        const int k = i * visits + j;
        if (r.is_missing(k)) continue;
        out << (i + 1) << "," << (j + 1) << "," << (t + 1) << "," << format_double(r[k]) << "\n";
      }
    }
  }
  return out.str();
}

Dataset dataset_from_long_csv_text(const std::string& text, int sites, int visits) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty dataset CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (split_csv_line(line) != std::vector<std::string>{"site", "visit", "year", "y"}) {
    throw IoError("long dataset CSV must have header site,visit,year,y");
  }
  struct Rec {
    int site, visit, year;
    double y;
  };
  std::vector<Rec> recs;
  int max_site = 0, max_visit = 0, max_year = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 4) throw IoError("long dataset CSV row has wrong field count");
    Rec r{static_cast<int>(parse_double(f[0])), static_cast<int>(parse_double(f[1])),
          static_cast<int>(parse_double(f[2])), parse_double(f[3])};
    max_site = std::max(max_site, r.site);
    max_visit = std::max(max_visit, r.visit);
    max_year = std::max(max_year, r.year);
    recs.push_back(r);
  }
  if (sites <= 0) sites = max_site;
  if (visits <= 0) visits = max_visit;
  if (max_site > sites || max_visit > visits) {
    throw ShapeMismatch("long dataset CSV exceeds declared sites/visits");
  }
  Dataset d;
  d.obs_dim = sites * visits;
  d.y.assign(static_cast<std::size_t>(max_year) * d.obs_dim, 0.0);
  d.missing.assign(static_cast<std::size_t>(max_year) * d.obs_dim, 1);
  for (const auto& r : recs) {
    const std::size_t off = (static_cast<std::size_t>(r.year - 1) * d.obs_dim) +
                            static_cast<std::size_t>((r.site - 1) * visits + (r.visit - 1));
    d.y[off] = r.y;
    d.missing[off] = 0;
  }
  return d;
}

namespace {

ordered_json nest_array(const CovariateStore::Array& arr, std::size_t dim, std::size_t& pos) {
  ordered_json node = ordered_json::array();
  if (dim + 1 == arr.shape.size()) {
    for (int i = 0; i < arr.shape[dim]; ++i) node.push_back(arr.data[pos++]);
    return node;
  }
  for (int i = 0; i < arr.shape[dim]; ++i) node.push_back(nest_array(arr, dim + 1, pos));
  return node;
}

void flatten_array(const ordered_json& node, std::vector<int>& shape, std::size_t depth,
                   std::vector<double>& out) {
  if (!node.is_array()) throw IoError("covariate JSON must contain nested arrays of numbers");
  const int n = static_cast<int>(node.size());
  if (depth == shape.size()) {
    shape.push_back(n);
  } else if (shape[depth] != n) {
    throw ShapeMismatch("ragged covariate array in JSON");
  }
  for (const auto& child : node) {
    if (child.is_number()) {
      if (depth + 1 != shape.size()) throw ShapeMismatch("ragged covariate array in JSON");
      out.push_back(child.get<double>());
    } else {
      flatten_array(child, shape, depth + 1, out);
    }
  }
}

}  // namespace

std::string covariates_to_json(const CovariateStore& c) {
  ordered_json root = ordered_json::object();
  for (const auto& [name, arr] : c.arrays) {
    std::size_t pos = 0;
    root[name] = nest_array(arr, 0, pos);
  }
  return root.dump(2) + "\n";
}

CovariateStore covariates_from_json_text(const std::string& text) {
  CovariateStore store;
  const auto root = ordered_json::parse(text);
  if (!root.is_object()) throw IoError("covariate JSON must be an object");
  for (const auto& [name, node] : root.items()) {
    CovariateStore::Array arr;
    flatten_array(node, arr.shape, 0, arr.data);
    store.arrays.emplace(name, std::move(arr));
  }
  return store;
}

void save_dataset(const Dataset& d, const std::filesystem::path& dir, const std::string& csv_name) {
  std::filesystem::create_directories(dir);
  write_file(dir / csv_name, dataset_to_csv(d));
  if (!d.covariates.empty()) {
    write_file(dir / "covariates.json", covariates_to_json(d.covariates));
  }
}

Dataset load_dataset(const std::filesystem::path& dir, const std::string& csv_name) {
  const auto csv_path = dir / csv_name;
  const std::string text = read_file(csv_path);
  Dataset d;
  // Wide format starts with "t,", long occupancy format with "site,".
  if (text.rfind("site,", 0) == 0) {
    d = dataset_from_long_csv_text(text, 0, 0);
  } else {
    d = dataset_from_csv_text(text);
  }
  const auto cov_path = dir / "covariates.json";
  if (std::filesystem::exists(cov_path)) {
    d.covariates = covariates_from_json_text(read_file(cov_path));
  }
  return d;
}

}  // namespace ssmup
