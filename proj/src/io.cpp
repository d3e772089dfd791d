#include "hadamard/io.hpp"

#include <array>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "hadamard/errors.hpp"

namespace hadamard {

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument(fmt::format("cannot open '{}'", path.string()));
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw std::runtime_error(fmt::format("short write to '{}'", path.string()));
}

std::string sha256_hex(const std::string& bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  std::string hex;
  hex.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_text_file(path)); }

std::string eigenvalues_csv(std::span<const double> values) {
  std::string out = "eigenvalue\n";
  for (double v : values) out += fmt::format("{:.17g}\n", v);
  return out;
}

std::string density_csv(const GridDensity& gd) {
  std::string out = "x,pdf,cdf\n";
  for (std::size_t i = 0; i < gd.xs.size(); ++i)
    out += fmt::format("{:.17g},{:.17g},{:.17g}\n", gd.xs[i], gd.pdf[i], gd.cdf[i]);
  return out;
}

Json theory_json(const GridDensity& gd, const AtomicMeasure& nu, double gamma, double eta) {
  Json j;
  j["gamma"] = gamma;
  j["nu_atoms"] = nu.atoms();
  j["nu_weights"] = nu.weights();
  j["eta"] = eta;
  j["zero_atom"] = gd.zero_atom;
  return j;
}

std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

std::string run_directory_name(const std::string& command, const Json& resolved, std::uint64_t seed) {
  return fmt::format("{}-{}-{}", command, sha256_hex(resolved.dump()).substr(0, 12), seed);
}

RunManifest::RunManifest(std::string command, std::string config_path, Json resolved, std::filesystem::path dir,
                         std::uint64_t seed, std::vector<std::string> files)
    : command_(std::move(command)),
      config_path_(std::move(config_path)),
      resolved_(std::move(resolved)),
      dir_(std::move(dir)),
      seed_(seed),
      files_(std::move(files)) {}

Json RunManifest::to_json(const Json& files, std::optional<double> wall_time_s) const {
  Json j;
  j["command"] = command_;
  j["config_path"] = config_path_;
  j["resolved_config"] = resolved_;
  j["output_dir"] = dir_.string();
  j["seed"] = seed_;
  j["tool_version"] = HADAMARD_VERSION;
  j["wall_time_s"] = wall_time_s ? Json(*wall_time_s) : Json(nullptr);
  j["files"] = files;
  return j;
}

void RunManifest::begin() const {
  std::filesystem::create_directories(dir_);
  Json files = Json::array();
  for (const auto& f : files_) files.push_back({{"name", f}, {"sha256", nullptr}});
  write_text_file(dir_ / kFileName, dump_json(to_json(files, std::nullopt)));
}

void RunManifest::finish(double wall_time_s) const {
  Json files = Json::array();
  for (const auto& f : files_) files.push_back({{"name", f}, {"sha256", sha256_file(dir_ / f)}});
  write_text_file(dir_ / kFileName, dump_json(to_json(files, wall_time_s)));
}

}  // namespace hadamard
