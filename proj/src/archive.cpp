#include "ssmup/archive.hpp"

#include <sstream>

#include "nlohmann/json.hpp"
#include "ssmup/errors.hpp"
#include "ssmup/util.hpp"

namespace ssmup {

using ordered_json = nlohmann::ordered_json;

namespace {

std::string matrix_to_csv(const std::vector<std::string>& header,
                          std::span<const double> values, std::size_t cols) {
  std::ostringstream out;
  for (std::size_t k = 0; k < header.size(); ++k) {
    if (k) out << ",";
    out << header[k];
  }
  out << "\n";
  const std::size_t rows = cols == 0 ? 0 : values.size() / cols;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t k = 0; k < cols; ++k) {
      if (k) out << ",";
      out << format_double(values[r * cols + k]);
    }
    out << "\n";
  }
  return out.str();
}

std::vector<double> matrix_from_csv(const std::filesystem::path& p, std::size_t cols,
                                    std::vector<std::string>* header_out) {
  const auto rows = read_csv(p);
  if (rows.empty()) throw CorruptArchive("empty CSV: " + p.string());
  if (header_out) *header_out = rows[0];
  if (cols == 0) cols = rows[0].size();
  std::vector<double> out;
  out.reserve((rows.size() - 1) * cols);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != cols) throw CorruptArchive("ragged CSV row in " + p.string());
    for (const auto& field : rows[r]) out.push_back(parse_double(field));
  }
  return out;
}

const char* kPayloadFiles[] = {"manifest.json", "theta.csv", "latents.csv", "data.csv",
                               "covariates.json"};

}  // namespace

PosteriorArchive make_archive(std::span<const Chain> chains, const std::string& model_id,
                              const Dataset& data, std::uint64_t seed) {
  if (chains.empty() || chains[0].kept == 0) {
    throw LengthMismatch("cannot archive an empty chain");
  }
  PosteriorArchive a;
  a.model_id = model_id;
  a.t = chains[0].T;
  a.state_dim = chains[0].state_dim;
  a.param_names = chains[0].param_names;
  a.data = data;
  a.seed = seed;
  if (data.T() != a.t) throw LengthMismatch("chain and dataset lengths differ");
  for (const auto& c : chains) {
    if (c.T != a.t || c.state_dim != a.state_dim || c.param_names != a.param_names) {
      throw LengthMismatch("chains disagree on shape");
    }
    a.N += c.kept;
    a.theta_draws.insert(a.theta_draws.end(), c.draws.begin(), c.draws.end());
    a.latent_draws.insert(a.latent_draws.end(), c.latent_draws.begin(), c.latent_draws.end());
  }
  return a;
}

void save_archive(const PosteriorArchive& a, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);

  write_file(dir / "theta.csv", matrix_to_csv(a.param_names, a.theta_draws,
                                              a.param_names.size()));

  std::vector<std::string> latent_header;
  latent_header.reserve(static_cast<std::size_t>(a.t) * a.state_dim);
  for (int s = 1; s <= a.t; ++s) {
    for (int d = 1; d <= a.state_dim; ++d) {
      latent_header.push_back("x_" + std::to_string(s) + "_" + std::to_string(d));
    }
  }
  write_file(dir / "latents.csv",
             matrix_to_csv(latent_header, a.latent_draws, latent_header.size()));

  write_file(dir / "data.csv", dataset_to_csv(a.data));
  if (!a.data.covariates.empty()) {
    write_file(dir / "covariates.json", covariates_to_json(a.data.covariates));
  }

  ordered_json manifest;
  manifest["format_version"] = a.format_version;
  manifest["model_id"] = a.model_id;
  manifest["t"] = a.t;
  manifest["N"] = a.N;
  manifest["state_dim"] = a.state_dim;
  manifest["param_names"] = a.param_names;
  manifest["seed"] = a.seed;
  manifest["data_checksum"] = sha256_file_hex(dir / "data.csv");
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");

  std::ostringstream sums;
  for (const char* name : kPayloadFiles) {
    const auto p = dir / name;
    if (!std::filesystem::exists(p)) continue;
    sums << sha256_file_hex(p) << "  " << name << "\n";
  }
  write_file(dir / "checksums.txt", sums.str());
}

PosteriorArchive load_archive(const std::filesystem::path& dir) {
  // Checksums first: any payload tampering must surface as CorruptArchive.
  const auto sums_path = dir / "checksums.txt";
  if (!std::filesystem::exists(sums_path)) throw CorruptArchive("missing checksums.txt");
  std::istringstream sums(read_file(sums_path));
  std::string line;
  while (std::getline(sums, line)) {
    if (line.empty()) continue;
    const auto sep = line.find("  ");
    if (sep == std::string::npos) throw CorruptArchive("malformed checksums.txt line");
    const std::string expect = line.substr(0, sep);
    const std::string name = line.substr(sep + 2);
    const auto p = dir / name;
    if (!std::filesystem::exists(p)) throw CorruptArchive("missing archive file: " + name);
    if (sha256_file_hex(p) != expect) {
      throw CorruptArchive("checksum mismatch for " + name);
    }
  }

  const auto manifest = ordered_json::parse(read_file(dir / "manifest.json"));
  PosteriorArchive a;
  a.format_version = manifest.at("format_version").get<int>();
  if (a.format_version != PosteriorArchive::kFormatVersion) {
    throw VersionMismatch("unsupported archive format version " +
                          std::to_string(a.format_version));
  }
  a.model_id = manifest.at("model_id").get<std::string>();
  a.t = manifest.at("t").get<int>();
  a.N = manifest.at("N").get<int>();
  a.state_dim = manifest.at("state_dim").get<int>();
  a.param_names = manifest.at("param_names").get<std::vector<std::string>>();
  a.seed = manifest.value("seed", std::uint64_t{0});

  std::vector<std::string> theta_header;
  a.theta_draws = matrix_from_csv(dir / "theta.csv", a.param_names.size(), &theta_header);
  if (theta_header != a.param_names) {
    throw CorruptArchive("theta.csv header disagrees with manifest param_names");
  }
  a.latent_draws = matrix_from_csv(dir / "latents.csv",
                                   static_cast<std::size_t>(a.t) * a.state_dim, nullptr);
  a.data = load_dataset(dir);

  if (static_cast<int>(a.theta_draws.size() / std::max<std::size_t>(1, a.param_names.size())) !=
          a.N &&
      !a.param_names.empty()) {
    throw CorruptArchive("theta.csv row count disagrees with manifest N");
  }
  if (a.latent_draws.size() !=
      static_cast<std::size_t>(a.N) * a.t * a.state_dim) {
    throw CorruptArchive("latents.csv size disagrees with manifest");
  }
  if (a.data.T() != a.t) throw CorruptArchive("data.csv length disagrees with manifest t");
  return a;
}

}  // namespace ssmup
