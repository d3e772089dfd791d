#include "hadamard/config.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string_view>

#include <fmt/format.h>

#include "hadamard/errors.hpp"

namespace hadamard {

namespace {

void require_known_keys(const Json& j, std::string_view where, std::initializer_list<std::string_view> keys) {
  if (!j.is_object()) throw InvalidArgument(fmt::format("{}: expected a JSON object", where));
  for (const auto& [key, value] : j.items()) {
    if (std::find(keys.begin(), keys.end(), key) == keys.end())
      throw InvalidArgument(fmt::format("{}: unknown key '{}'", where, key));
  }
}

template <class T>
T get_required(const Json& j, const char* key, std::string_view where) {
  if (!j.contains(key)) throw InvalidArgument(fmt::format("{}: missing required key '{}'", where, key));
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(fmt::format("{}: bad value for '{}': {}", where, key, e.what()));
  }
}

template <class T>
T get_or(const Json& j, const char* key, T fallback, std::string_view where) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return get_required<T>(j, key, where);
}

std::vector<CovarianceSpec> parse_specs(const Json& j, std::string_view where) {
  if (!j.contains("specs") || !j.at("specs").is_array())
    throw InvalidArgument(fmt::format("{}: 'specs' must be an array", where));
  std::vector<CovarianceSpec> specs;
  for (const auto& s : j.at("specs")) specs.push_back(parse_covariance_spec(s));
  return specs;
}

}  // namespace

Json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument(fmt::format("cannot open config file '{}'", path));
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return Json::parse(buf.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidArgument(fmt::format("config file '{}' is not valid JSON: {}", path, e.what()));
  }
}

Json apply_overrides(Json config, const Overrides& o) {
  if (o.seed) config["seed"] = *o.seed;
  if (o.replicas) config["replicas"] = *o.replicas;
  if (o.eta) config["eta"] = *o.eta;
  if (o.grid_points) config["grid_points"] = *o.grid_points;
  if (o.n) {
    config["n"] = *o.n;
    // An explicit d was sized for the old n; rederive it from gamma.
    config.erase("d");
  }
  return config;
}

CovarianceSpec parse_covariance_spec(const Json& j) {
  const auto kind = get_required<std::string>(j, "kind", "covariance spec");
  CovarianceSpec spec;
  if (kind == "identity") {
    require_known_keys(j, "identity spec", {"kind"});
    spec.kind = IdentityCov{};
  } else if (kind == "atomic") {
    require_known_keys(j, "atomic spec", {"kind", "values", "proportions"});
    AtomicCov a;
    a.values = get_required<std::vector<double>>(j, "values", "atomic spec");
    a.proportions = get_required<std::vector<double>>(j, "proportions", "atomic spec");
    spec.kind = std::move(a);
  } else if (kind == "toeplitz") {
    require_known_keys(j, "toeplitz spec", {"kind", "rho"});
    spec.kind = ToeplitzCov{get_required<double>(j, "rho", "toeplitz spec")};
  } else if (kind == "wishart") {
    require_known_keys(j, "wishart spec", {"kind", "gamma_prime", "seed"});
    spec.kind = WishartCov{get_required<double>(j, "gamma_prime", "wishart spec"),
                           get_or<std::uint64_t>(j, "seed", 0, "wishart spec")};
  } else {
    throw InvalidArgument(fmt::format("covariance spec: unknown kind '{}' (identity|atomic|toeplitz|wishart)", kind));
  }
  // Shape checks that do not need d.
  CovarianceSpec probe = spec;
  probe.d = 1;
  probe.validate();
  return spec;
}

Json to_json(const CovarianceSpec& spec) {
  Json j;
  if (std::holds_alternative<IdentityCov>(spec.kind)) {
    j["kind"] = "identity";
  } else if (const auto* a = std::get_if<AtomicCov>(&spec.kind)) {
    j["kind"] = "atomic";
    j["values"] = a->values;
    j["proportions"] = a->proportions;
  } else if (const auto* t = std::get_if<ToeplitzCov>(&spec.kind)) {
    j["kind"] = "toeplitz";
    j["rho"] = t->rho;
  } else if (const auto* w = std::get_if<WishartCov>(&spec.kind)) {
    j["kind"] = "wishart";
    j["gamma_prime"] = w->gamma_prime;
    j["seed"] = w->seed;
  }
  return j;
}

ExperimentConfig parse_experiment(const Json& j, bool require_n) {
  constexpr std::string_view where = "experiment config";
  require_known_keys(j, where,
                     {"k", "n", "gamma", "d", "specs", "dist", "seed", "replicas", "grid_points", "eta", "tol",
                      "max_iter", "theory_gamma", "max_n", "bins", "description"});
  ExperimentConfig cfg;
  cfg.k = get_required<int>(j, "k", where);
  cfg.gamma = get_required<double>(j, "gamma", where);
  cfg.n = require_n ? get_required<int>(j, "n", where) : get_or<int>(j, "n", 0, where);
  cfg.d = get_or<std::vector<int>>(j, "d", {}, where);
  cfg.specs = parse_specs(j, where);
  cfg.dist = parse_distribution(get_or<std::string>(j, "dist", "gaussian", where));
  cfg.seed = get_or<std::uint64_t>(j, "seed", 0, where);
  cfg.replicas = get_or<int>(j, "replicas", 1, where);
  cfg.grid_points = get_or<int>(j, "grid_points", 2001, where);
  cfg.eta = get_or<double>(j, "eta", 1e-4, where);
  cfg.solver.tol = get_or<double>(j, "tol", 1e-12, where);
  cfg.solver.max_iter = get_or<int>(j, "max_iter", 2000, where);
  if (j.contains("theory_gamma") && !j.at("theory_gamma").is_null())
    cfg.theory_gamma = get_required<double>(j, "theory_gamma", where);
  cfg.max_n = get_or<int>(j, "max_n", 6000, where);
  cfg.bins = get_or<int>(j, "bins", 0, where);
  return cfg;
}

Json to_json(const ExperimentConfig& cfg) {
  Json j;
  j["k"] = cfg.k;
  j["n"] = cfg.n;
  j["gamma"] = cfg.gamma;
  j["d"] = cfg.d;
  Json specs = Json::array();
  for (const auto& s : cfg.specs) specs.push_back(to_json(s));
  j["specs"] = specs;
  j["dist"] = to_string(cfg.dist);
  j["seed"] = cfg.seed;
  j["replicas"] = cfg.replicas;
  j["grid_points"] = cfg.grid_points;
  j["eta"] = cfg.eta;
  j["tol"] = cfg.solver.tol;
  j["max_iter"] = cfg.solver.max_iter;
  if (cfg.theory_gamma) j["theory_gamma"] = *cfg.theory_gamma;
  j["max_n"] = cfg.max_n;
  j["bins"] = cfg.bins;
  return j;
}

TensorCheckConfig parse_tensor_check(const Json& j) {
  constexpr std::string_view where = "tensor-check config";
  require_known_keys(j, where, {"cases", "instances", "instance_n", "dist", "seed", "description"});
  TensorCheckConfig cfg;
  if (!j.contains("cases") || !j.at("cases").is_array() || j.at("cases").empty())
    throw InvalidArgument("tensor-check config: 'cases' must be a nonempty array");
  for (const auto& c : j.at("cases")) {
    require_known_keys(c, "tensor-check case", {"d", "specs"});
    TensorCheckCase tc;
    tc.d = get_required<std::vector<int>>(c, "d", "tensor-check case");
    tc.specs = parse_specs(c, "tensor-check case");
    if (tc.d.size() != tc.specs.size() || tc.d.empty())
      throw InvalidArgument("tensor-check case: 'd' and 'specs' must be nonempty and of equal length");
    for (std::size_t i = 0; i < tc.d.size(); ++i) {
      tc.specs[i].d = tc.d[i];
      tc.specs[i].validate();
    }
    cfg.cases.push_back(std::move(tc));
  }
  cfg.instances = get_or<int>(j, "instances", 20, where);
  cfg.instance_n = get_or<int>(j, "instance_n", 8, where);
  cfg.dist = parse_distribution(get_or<std::string>(j, "dist", "gaussian", where));
  cfg.seed = get_or<std::uint64_t>(j, "seed", 0, where);
  if (cfg.instances < 0) throw InvalidArgument("tensor-check config: instances must be >= 0");
  if (cfg.instance_n < 1 || cfg.instance_n > 64)
    throw InvalidArgument("tensor-check config: instance_n must be in [1, 64]");
  return cfg;
}

ConcentrationSweep parse_concentration(const Json& j) {
  constexpr std::string_view where = "concentration config";
  require_known_keys(j, where, {"k", "d_mins", "specs", "dist", "b_choice", "gamma", "trials", "seed", "description"});
  ConcentrationSweep s;
  s.k = get_required<int>(j, "k", where);
  s.d_mins = get_required<std::vector<int>>(j, "d_mins", where);
  if (j.contains("specs")) {
    s.specs = parse_specs(j, where);
  } else {
    s.specs.assign(static_cast<std::size_t>(std::max(s.k, 0)), CovarianceSpec{IdentityCov{}, 1});
  }
  s.dist = parse_distribution(get_or<std::string>(j, "dist", "gaussian", where));
  s.b_choice = parse_test_operator(get_or<std::string>(j, "b_choice", "identity", where));
  s.gamma = get_or<double>(j, "gamma", 1.0, where);
  s.trials = get_or<int>(j, "trials", 10000, where);
  s.seed = get_or<std::uint64_t>(j, "seed", 0, where);
  return s;
}

}  // namespace hadamard
