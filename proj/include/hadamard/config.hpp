#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "hadamard/covmodel.hpp"
#include "hadamard/simulate.hpp"
#include "hadamard/tensoralg.hpp"

namespace hadamard {

using Json = nlohmann::ordered_json;

/// Command-line overrides applied on top of a config file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> replicas;
  std::optional<double> eta;
  std::optional<int> grid_points;
  std::optional<int> n;
};

Json load_config_file(const std::string& path);

/// Applies overrides to the raw JSON so that the resolved config echoed in
/// outputs is exactly what ran.
Json apply_overrides(Json config, const Overrides& o);

/// `{"kind":"toeplitz","rho":0.9}`, `{"kind":"atomic","values":[..],"proportions":[..]}`,
/// `{"kind":"identity"}`, `{"kind":"wishart","gamma_prime":2.0,"seed":7}`.
CovarianceSpec parse_covariance_spec(const Json& j);
Json to_json(const CovarianceSpec& spec);

/// Experiment schema: k, n, gamma, d?, specs, dist, seed, replicas,
/// grid_points, eta, tol, plus optional max_iter, theory_gamma, max_n, bins.
/// When `require_n` is false (theory-only runs) n may be absent.
ExperimentConfig parse_experiment(const Json& j, bool require_n = true);
Json to_json(const ExperimentConfig& cfg);

struct TensorCheckCase {
  std::vector<int> d;
  std::vector<CovarianceSpec> specs;
};

struct TensorCheckConfig {
  std::vector<TensorCheckCase> cases;
  int instances = 20;     // seeded factorization instances
  int instance_n = 8;     // rows per instance (<= 64)
  RowDistribution dist = RowDistribution::gaussian;
  std::uint64_t seed = 0;
};

TensorCheckConfig parse_tensor_check(const Json& j);

/// Concentration schema: k, d_mins, specs, dist, b_choice, gamma, trials, seed.
ConcentrationSweep parse_concentration(const Json& j);

}  // namespace hadamard
