#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ssmup/dataset.hpp"
#include "ssmup/mcmc.hpp"

namespace ssmup {

// Persisted reduced-model output: N posterior draws of (x_{1:t}, theta), the
// data y_{1:t} and metadata. On disk it is a directory:
//   manifest.json   {format_version, model_id, t, N, state_dim, param_names,
//                    data_checksum}
//   theta.csv       header = param_names, N rows
//   latents.csv     header x_1_1..x_t_d, row-major time-then-dimension
//   data.csv        wide dataset format (+ covariates.json when present)
//   checksums.txt   per-file SHA-256
// Floats are serialised as shortest round-trip decimals, so load(save(A))
// reproduces A bitwise.
struct PosteriorArchive {
  static constexpr int kFormatVersion = 1;

  std::string model_id;
  int t = 0;
  int N = 0;
  int state_dim = 1;
  std::vector<std::string> param_names;
  std::vector<double> theta_draws;   // N x P
  std::vector<double> latent_draws;  // N x t x state_dim
  Dataset data;
  std::uint64_t seed = 0;
  int format_version = kFormatVersion;

  std::span<const double> theta_row(int j) const {
    return {theta_draws.data() + static_cast<std::size_t>(j) * param_names.size(),
            param_names.size()};
  }
  std::span<const double> latent_row(int j) const {
    return {latent_draws.data() + static_cast<std::size_t>(j) * t * state_dim,
            static_cast<std::size_t>(t) * state_dim};
  }
  std::span<const double> latent_at(int j, int s) const {
    return {latent_draws.data() +
                (static_cast<std::size_t>(j) * t + s) * state_dim,
            static_cast<std::size_t>(state_dim)};
  }
};

// Concatenates chains (draws and latents) into an archive.
PosteriorArchive make_archive(std::span<const Chain> chains, const std::string& model_id,
                              const Dataset& data, std::uint64_t seed);

void save_archive(const PosteriorArchive& archive, const std::filesystem::path& dir);

// Verifies checksums (CorruptArchive) and format version (VersionMismatch).
PosteriorArchive load_archive(const std::filesystem::path& dir);

}  // namespace ssmup
