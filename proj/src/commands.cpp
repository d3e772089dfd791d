#include "hadamard/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "hadamard/errors.hpp"
#include "hadamard/io.hpp"
#include "hadamard/rng.hpp"
#include "hadamard/simulate.hpp"
#include "hadamard/tensoralg.hpp"

namespace hadamard {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Loads the config, applies overrides and returns the raw resolved JSON.
Json resolve(const CommandContext& ctx) {
  return apply_overrides(load_config_file(ctx.config_path), ctx.overrides);
}

struct Run {
  RunManifest manifest;
  Clock::time_point start;

  void write(const std::string& name, const std::string& text) const {
    write_text_file(manifest.dir() / name, text);
  }
};

Run open_run(const CommandContext& ctx, const std::string& command, const Json& resolved, std::uint64_t seed,
             std::vector<std::string> files) {
  const auto dir = ctx.out_root / run_directory_name(command, resolved, seed);
  Run run{RunManifest(command, ctx.config_path, resolved, dir, seed, std::move(files)), Clock::now()};
  run.manifest.begin();
  return run;
}

Json spectrum_report(const ExperimentConfig& cfg, const SpectrumResult& res) {
  Json j;
  j["ks"] = res.ks;
  j["w1"] = res.w1;
  j["n"] = cfg.n;
  j["d"] = cfg.d;
  j["gamma"] = cfg.gamma;
  j["realized_gamma"] = res.realized_gamma;
  j["theory_gamma"] = cfg.effective_theory_gamma();
  j["replicas"] = cfg.replicas;
  j["eigenvalue_count"] = res.eigenvalues.size();
  j["C"] = res.norm_bound;
  j["factor_norms"] = res.factor_norms;
  j["zero_atom"] = res.theory.zero_atom;
  j["empirical_zero_fraction"] =
      static_cast<double>(std::count_if(res.eigenvalues.begin(), res.eigenvalues.end(),
                                        [](double x) { return std::abs(x) < 1e-8; })) /
      static_cast<double>(res.eigenvalues.size());
  j["min_eigenvalue"] = res.min_eigenvalue;
  j["max_eigenvalue"] = res.eigenvalues.back();
  j["mean_trace"] = res.mean_trace;
  j["max_trace_mismatch"] = res.max_trace_mismatch;
  j["numerical_rank_max"] = res.numerical_rank_max;
  j["density_max_clipped"] = res.theory.max_clipped;
  j["config"] = to_json(cfg);
  return j;
}

ExperimentConfig experiment_from(const Json& resolved) {
  ExperimentConfig cfg = parse_experiment(resolved);
  cfg.validate();
  return cfg;
}

}  // namespace

CommandOutcome cmd_theory(const CommandContext& ctx) {
  const Json resolved = resolve(ctx);
  ExperimentConfig cfg = parse_experiment(resolved, /*require_n=*/false);

  std::vector<AtomicMeasure> factors;
  if (cfg.n > 0) {
    cfg.validate();
    for (const auto& s : build_sigmas(cfg)) factors.push_back(spectral_measure(s));
  } else {
    if (static_cast<int>(cfg.specs.size()) != cfg.k || cfg.k < 1)
      throw InvalidArgument(fmt::format("config: {} covariance specs for k = {}", cfg.specs.size(), cfg.k));
    if (!cfg.d.empty() && cfg.d.size() != cfg.specs.size())
      throw InvalidArgument("config: d and specs differ in length");
    for (std::size_t i = 0; i < cfg.specs.size(); ++i) {
      CovarianceSpec spec = cfg.specs[i];
      if (!cfg.d.empty()) {
        spec.d = cfg.d[i];
        spec.validate();
        factors.push_back(spectral_measure(build_sigma(spec)));
      } else if (auto m = limit_measure(spec)) {
        factors.push_back(*m);
      } else {
        throw InvalidArgument("config: spec needs a dimension; give d or n");
      }
    }
  }
  const double gamma = cfg.effective_theory_gamma();
  if (!(gamma > 0.0)) throw InvalidArgument("config: gamma must be positive");
  if (cfg.grid_points < 2) throw InvalidArgument("config: grid_points must be >= 2");

  Run run = open_run(ctx, "theory", resolved, cfg.seed, {"density.csv", "theory.json"});
  const AtomicMeasure nu = mult_convolve_all(factors);
  const GridDensity gd = gram_limit_density(nu, gamma, default_grid(nu, gamma, cfg.grid_points), cfg.eta, cfg.solver);
  const Json theory = theory_json(gd, nu, gamma, cfg.eta);
  run.write("density.csv", density_csv(gd));
  run.write("theory.json", dump_json(theory));
  run.manifest.finish(seconds_since(run.start));
  return {run.manifest.dir(), 0, theory};
}

CommandOutcome cmd_simulate(const CommandContext& ctx) {
  const Json resolved = resolve(ctx);
  const ExperimentConfig cfg = experiment_from(resolved);
  Run run = open_run(ctx, "simulate", resolved, cfg.seed, {"eigenvalues.csv", "report.json"});
  const SpectrumResult res = run_experiment(cfg);
  const Json report = spectrum_report(cfg, res);
  run.write("eigenvalues.csv", eigenvalues_csv(res.eigenvalues));
  run.write("report.json", dump_json(report));
  run.manifest.finish(seconds_since(run.start));
  return {run.manifest.dir(), 0, report};
}

CommandOutcome cmd_compare(const CommandContext& ctx) {
  const Json resolved = resolve(ctx);
  const ExperimentConfig cfg = experiment_from(resolved);
  Run run = open_run(ctx, "compare", resolved, cfg.seed,
                     {"report.json", "histogram.csv", "density.csv", "theory.json", "eigenvalues.csv"});
  const SpectrumResult res = run_experiment(cfg);
  const Json report = spectrum_report(cfg, res);
  run.write("report.json", dump_json(report));
  run.write("histogram.csv", to_csv(res.hist));
  run.write("density.csv", density_csv(res.theory));
  run.write("theory.json", dump_json(theory_json(res.theory, res.nu, cfg.effective_theory_gamma(), cfg.eta)));
  run.write("eigenvalues.csv", eigenvalues_csv(res.eigenvalues));
  run.manifest.finish(seconds_since(run.start));
  return {run.manifest.dir(), 0, report};
}

CommandOutcome cmd_tensor_check(const CommandContext& ctx) {
  constexpr double kTol = 1e-10;
  const Json resolved = resolve(ctx);
  const TensorCheckConfig cfg = parse_tensor_check(resolved);
  Run run = open_run(ctx, "tensor-check", resolved, cfg.seed, {"tensor_check.json"});

  std::vector<std::vector<CovarianceMatrix>> case_sigmas;
  Json cases = Json::array();
  bool ok = true;
  double worst_spectrum = 0.0;
  for (const auto& tc : cfg.cases) {
    std::vector<CovarianceMatrix> sigmas;
    for (const auto& spec : tc.specs) sigmas.push_back(build_sigma(spec));
    const auto t = braid(std::span<const CovarianceMatrix>(sigmas));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(t.matrix, Eigen::EigenvaluesOnly);
    const auto oracle = tensor_spectrum_oracle(sigmas);
    double max_diff = 0.0;
    for (std::size_t i = 0; i < oracle.size(); ++i)
      max_diff = std::max(max_diff, std::abs(eig.eigenvalues()(static_cast<Eigen::Index>(i)) - oracle[i]));
    double norm_product = 1.0;
    for (const auto& s : sigmas) norm_product *= s.norm();
    const double top = eig.eigenvalues().maxCoeff();
    const bool case_ok = max_diff < kTol && top <= norm_product + kTol;
    ok = ok && case_ok;
    worst_spectrum = std::max(worst_spectrum, max_diff);

    Json specs = Json::array();
    for (const auto& s : tc.specs) specs.push_back(to_json(s));
    cases.push_back({{"d", tc.d},
                     {"specs", specs},
                     {"max_spectrum_diff", max_diff},
                     {"max_eigenvalue", top},
                     {"norm_product", norm_product},
                     {"pass", case_ok}});
    case_sigmas.push_back(std::move(sigmas));
  }

  Json instances = Json::array();
  double worst_factorization = 0.0;
  for (int t = 0; t < cfg.instances; ++t) {
    const auto c = static_cast<std::size_t>(t) % case_sigmas.size();
    std::vector<Eigen::MatrixXd> xs;
    for (std::size_t i = 0; i < case_sigmas[c].size(); ++i)
      xs.push_back(sample_matrix(case_sigmas[c][i], cfg.instance_n, cfg.dist,
                                 derive_seed(cfg.seed, {stream::kTensorCheck, static_cast<std::uint64_t>(t), i})));
    const double dev = tensor_columns_check(xs);
    worst_factorization = std::max(worst_factorization, dev);
    ok = ok && dev < kTol;
    instances.push_back({{"instance", t}, {"case", c}, {"max_deviation", dev}});
  }

  Json out;
  out["tolerance"] = kTol;
  out["pass"] = ok;
  out["max_spectrum_diff"] = worst_spectrum;
  out["max_factorization_deviation"] = worst_factorization;
  out["cases"] = cases;
  out["instances"] = instances;
  run.write("tensor_check.json", dump_json(out));
  run.manifest.finish(seconds_since(run.start));
  return {run.manifest.dir(), ok ? 0 : 2, out};
}

CommandOutcome cmd_concentration(const CommandContext& ctx) {
  const Json resolved = resolve(ctx);
  const ConcentrationSweep sweep = parse_concentration(resolved);
  Run run = open_run(ctx, "concentration", resolved, sweep.seed, {"concentration.csv", "concentration_summary.json"});
  const auto rows = run_concentration_sweep(sweep);

  Json ratios = Json::array();
  for (std::size_t i = 1; i < rows.size(); ++i) ratios.push_back(rows[i].estimate / rows[i - 1].estimate);
  Json table = Json::array();
  for (const auto& r : rows)
    table.push_back({{"d_min", r.d_min}, {"n", r.n}, {"estimate", r.estimate}, {"stderr", r.std_error}});
  Json summary;
  summary["k"] = sweep.k;
  summary["b_choice"] = to_string(sweep.b_choice);
  summary["dist"] = to_string(sweep.dist);
  summary["gamma"] = sweep.gamma;
  summary["trials"] = sweep.trials;
  summary["rows"] = table;
  summary["consecutive_ratios"] = ratios;

  run.write("concentration.csv", to_csv(rows));
  run.write("concentration_summary.json", dump_json(summary));
  run.manifest.finish(seconds_since(run.start));
  return {run.manifest.dir(), 0, summary};
}

}  // namespace hadamard
