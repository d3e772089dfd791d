#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hadamard/config.hpp"
#include "hadamard/stieltjes.hpp"

namespace hadamard {

std::string read_text_file(const std::filesystem::path& path);
/// Writes `text` byte-for-byte (no newline translation).
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// Lowercase hex SHA-256 of a byte string.
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

/// `eigenvalue` header, one value per line, 17 significant digits.
std::string eigenvalues_csv(std::span<const double> values);
/// `x,pdf,cdf` header.
std::string density_csv(const GridDensity& gd);
/// {gamma, nu_atoms, nu_weights, eta, zero_atom}
Json theory_json(const GridDensity& gd, const AtomicMeasure& nu, double gamma, double eta);

/// Pretty-printed JSON with a trailing newline.
std::string dump_json(const Json& j);

/// `<command>-<first 12 hex of sha256(resolved config)>-<seed>`.
std::string run_directory_name(const std::string& command, const Json& resolved, std::uint64_t seed);

/// Run manifest. `begin` writes it with the planned file list before any
/// output exists; `finish` rewrites it with checksums and wall time.
class RunManifest {
 public:
  RunManifest(std::string command, std::string config_path, Json resolved, std::filesystem::path dir,
              std::uint64_t seed, std::vector<std::string> files);

  void begin() const;
  void finish(double wall_time_s) const;
  const std::filesystem::path& dir() const { return dir_; }

  static constexpr const char* kFileName = "run_manifest.json";

 private:
  Json to_json(const Json& files, std::optional<double> wall_time_s) const;

  std::string command_;
  std::string config_path_;
  Json resolved_;
  std::filesystem::path dir_;
  std::uint64_t seed_;
  std::vector<std::string> files_;
};

}  // namespace hadamard
