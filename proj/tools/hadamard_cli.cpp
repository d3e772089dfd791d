#include <exception>
#include <functional>
#include <map>
#include <string>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "hadamard/commands.hpp"
#include "hadamard/errors.hpp"

using namespace hadamard;

namespace {

void add_common_flags(CLI::App* sub, CommandContext& ctx) {
  sub->add_option("--config", ctx.config_path, "JSON config file")->required()->check(CLI::ExistingFile);
  sub->add_option("--out", ctx.out_root, "Parent directory for run outputs")->capture_default_str();
  sub->add_option("--seed", ctx.overrides.seed, "Override the master seed");
  sub->add_option("--replicas", ctx.overrides.replicas, "Override the replica count");
  sub->add_option("--eta", ctx.overrides.eta, "Override the inversion smoothing parameter");
  sub->add_option("--grid-points", ctx.overrides.grid_points, "Override the theory grid size");
  sub->add_option("--n", ctx.overrides.n, "Override n (d is rederived from gamma)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectra of Hadamard products of correlated sample covariance matrices"};
  app.set_version_flag("--version", std::string(HADAMARD_VERSION));
  app.require_subcommand(1);

  CommandContext ctx;
  const std::map<std::string, std::pair<std::string, std::function<CommandOutcome(const CommandContext&)>>> commands{
      {"theory", {"Limiting density curve for a config", cmd_theory}},
      {"simulate", {"Simulate the random matrix and record its spectrum", cmd_simulate}},
      {"compare", {"Simulate and compare with the limiting law", cmd_compare}},
      {"tensor-check", {"Check covariance-tensor spectra and the tensor-column factorization", cmd_tensor_check}},
      {"concentration", {"Quadratic-form concentration sweep", cmd_concentration}},
  };
  for (const auto& [name, entry] : commands) add_common_flags(app.add_subcommand(name, entry.first), ctx);

  CLI11_PARSE(app, argc, argv);

  for (const auto& [name, entry] : commands) {
    if (!app.got_subcommand(name)) continue;
    try {
      const CommandOutcome out = entry.second(ctx);
      fmt::print("{}\n", out.dir.string());
      if (out.exit_code != 0) fmt::print(stderr, "{}: checks failed, see {}\n", name, out.dir.string());
      return out.exit_code;
    } catch (const SolverError& e) {
      fmt::print(stderr, "solver error: {} (last residual {:.3g})\n", e.what(), e.last_residual());
      return 3;
    } catch (const std::exception& e) {
      fmt::print(stderr, "error: {}\n", e.what());
      return 1;
    }
  }
  return 1;
}
