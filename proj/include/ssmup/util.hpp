#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace ssmup {

// log(sum(exp(v))) with max stabilisation; -inf for empty / all -inf input.
double logsumexp(std::span<const double> v);

// Shortest round-trip decimal representation (std::to_chars).
std::string format_double(double x);
double parse_double(const std::string& s);

std::string sha256_hex(std::span<const unsigned char> bytes);
std::string sha256_hex(const std::string& s);
std::string sha256_file_hex(const std::filesystem::path& p);

std::string read_file(const std::filesystem::path& p);
void write_file(const std::filesystem::path& p, const std::string& content);

// Minimal dense square matrix for proposal covariances (P is tiny).
struct Matrix {
  int n = 0;
  std::vector<double> a;  // row-major n x n

  Matrix() = default;
  explicit Matrix(int dim) : n(dim), a(static_cast<std::size_t>(dim) * dim, 0.0) {}
  static Matrix identity(int dim);

  double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * n + j]; }
  double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * n + j]; }

  // Lower-triangular Cholesky factor; throws InvalidParams if not SPD.
  Matrix cholesky() const;
};

// CSV helpers: RFC-less simple CSV (no quoting; our fields never contain commas).
std::vector<std::string> split_csv_line(const std::string& line);
std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& p);

}  // namespace ssmup
