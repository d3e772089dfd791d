// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "../oracles.hpp"
#include "hadamard/commands.hpp"
#include "hadamard/io.hpp"
#include "hadamard/metrics.hpp"
#include "hadamard/rng.hpp"
#include "hadamard/simulate.hpp"
#include "hadamard/stieltjes.hpp"
#include "hadamard/tensoralg.hpp"

using namespace hadamard;
namespace fs = std::filesystem;

namespace {

const fs::path kPresets = HADAMARD_PRESET_DIR;

int failures = 0;

void report(bool ok, const std::string& name, const std::string& detail) {
  fmt::print("{} {}: {}\n", ok ? "PASS" : "FAIL", name, detail);
  std::fflush(stdout);
  if (!ok) ++failures;
}

template <class F>
void guarded(const std::string& name, F&& body) {
  try {
    body();
  } catch (const std::exception& e) {
    report(false, name, fmt::format("threw: {}", e.what()));
  }
}

fs::path out_root() {
  static const fs::path root = [] {
    const auto p = fs::temp_directory_path() / "hadamard_acceptance";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return root;
}

CommandContext preset(const std::string& name) {
  CommandContext ctx;
  ctx.config_path = (kPresets / (name + ".json")).string();
  ctx.out_root = out_root();
  return ctx;
}

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

void fig1() {
  const int threads = omp_get_max_threads();
  omp_set_num_threads(1);
  const auto start = std::chrono::steady_clock::now();
  const auto out = cmd_compare(preset("fig1"));
  const double wall = seconds_since(start);
  omp_set_num_threads(threads);
  const double ks = out.summary["ks"].get<double>();
  const int replicas = out.summary["replicas"].get<int>();
  report(ks < 0.05 && wall < 180.0 && replicas == 3, "fig1 reproduction",
         fmt::format("n={} replicas={} ks={:.4f} (<0.05) single-thread wall={:.1f}s (<180)",
                     out.summary["n"].get<int>(), replicas, ks, wall));
}

void figs234() {
  std::string detail;
  bool ok = true;
  for (const char* name : {"fig2", "fig3", "fig4"}) {
    const auto out = cmd_compare(preset(name));
    const double ks = out.summary["ks"].get<double>();
    const int n = out.summary["n"].get<int>();
    ok = ok && ks < 0.06 && n >= 2500 && n <= 4000;
    detail += fmt::format("{} n={} ks={:.4f}; ", name, n, ks);
  }
  report(ok, "fig2-4 presets", detail + "(each < 0.06)");
}

void identity() {
  const auto out = cmd_compare(preset("identity"));
  // Compare against plain MP at the realized ratio, independent of the product-law path.
  const auto eig = read_text_file(out.dir / "eigenvalues.csv");
  std::vector<double> ev;
  std::size_t pos = eig.find('\n') + 1;
  while (pos < eig.size()) {
    const auto end = eig.find('\n', pos);
    ev.push_back(std::stod(eig.substr(pos, end - pos)));
    pos = end + 1;
  }
  std::sort(ev.begin(), ev.end());
  const double gamma = out.summary["realized_gamma"].get<double>();
  const auto one = AtomicMeasure::dirac(1.0);
  const auto mp = mp_boxtimes_density(one, gamma, default_grid(one, gamma), 1e-4);
  const double ks = ks_distance(snap_kernel(ev), law_of(mp));
  const int n = out.summary["n"].get<int>();
  report(ks < 0.04 && n == 3000, "identity sanity",
         fmt::format("n={} d={} ks vs plain MP={:.4f} (<0.04)", n, out.summary["d"].dump(), ks));
}

void solver() {
  const auto one = AtomicMeasure::dirac(1.0);
  double worst_s = 0, worst_pdf = 0;
  int points = 0;
  for (double gamma : {0.25, 0.5, 1.0, 2.0, 4.0}) {
    const double b = (1 + std::sqrt(gamma)) * (1 + std::sqrt(gamma));
    for (int i = 0; i < 20; ++i) {
      for (int j = 0; j < 10; ++j) {
        const HalfPlanePoint z(-0.5 + (b + 1.0) * i / 19.0, std::pow(10.0, -4.0 + 4.0 * j / 9.0));
        const Complex s = mp_boxtimes_stieltjes(one, gamma, z);
        worst_s = std::max(worst_s, std::abs(s - oracle::mp_quadratic_root(gamma, z.z())));
        ++points;
      }
    }
    const auto gd = mp_boxtimes_density(one, gamma, default_grid(one, gamma), 1e-4);
    const auto [lo, hi] = mp_edges(gamma);
    for (std::size_t i = 0; i < gd.xs.size(); ++i)
      if (gd.xs[i] >= lo + 0.05 && gd.xs[i] <= hi - 0.05)
        worst_pdf = std::max(worst_pdf, std::abs(gd.pdf[i] - oracle::mp_density(gamma, gd.xs[i])));
  }
  const double atom = mp_boxtimes_density(one, 4.0, default_grid(one, 4.0), 1e-4).zero_atom;
  report(worst_s < 1e-8 && worst_pdf < 5e-3 && atom == 0.75, "MP solver vs closed form",
         fmt::format("{} z-points per gamma, max |s - root|={:.2e} (<1e-8); max pdf err={:.2e} (<5e-3); "
                     "gamma=4 zero_atom={}",
                     points / 5, worst_s, worst_pdf, atom));
}

void tensor() {
  const auto cfg = parse_tensor_check(load_config_file((kPresets / "tensor_check.json").string()));
  double worst_spec = 0, worst_norm_excess = -1e300, worst_fact = 0;
  std::vector<std::vector<CovarianceMatrix>> all;
  std::string dims;
  for (const auto& c : cfg.cases) {
    std::vector<CovarianceMatrix> s;
    for (const auto& spec : c.specs) s.push_back(build_sigma(spec));
    const Eigen::VectorXd ev = oracle::symmetric_eigenvalues(braid(std::span<const CovarianceMatrix>(s)).matrix);
    std::vector<double> prods{1.0};
    double norm = 1.0;
    for (const auto& sig : s) {
      const Eigen::VectorXd e = oracle::symmetric_eigenvalues(sig.matrix());
      std::vector<double> next;
      for (double p : prods)
        for (Eigen::Index i = 0; i < e.size(); ++i) next.push_back(p * e(i));
      prods = std::move(next);
      norm *= e.maxCoeff();
    }
    std::sort(prods.begin(), prods.end());
    for (std::size_t i = 0; i < prods.size(); ++i)
      worst_spec = std::max(worst_spec, std::abs(ev(static_cast<Eigen::Index>(i)) - prods[i]));
    worst_norm_excess = std::max(worst_norm_excess, ev.maxCoeff() - norm);
    dims += fmt::format("({}) ", fmt::join(c.d, ","));
    all.push_back(std::move(s));
  }
  for (int t = 0; t < cfg.instances; ++t) {
    const auto& s = all[static_cast<std::size_t>(t) % all.size()];
    std::vector<Eigen::MatrixXd> xs;
    for (std::size_t i = 0; i < s.size(); ++i)
      xs.push_back(sample_matrix(s[i], cfg.instance_n, cfg.dist, derive_seed(cfg.seed, {stream::kTensorCheck, static_cast<std::uint64_t>(t), i})));
    const Eigen::MatrixXd a = tensor_columns(xs);
    const Eigen::MatrixXd m = a.transpose() * a / static_cast<double>(a.rows());
    worst_fact = std::max(worst_fact, (m - hadamard_gram_reference(xs)).cwiseAbs().maxCoeff());
  }
  const auto out = cmd_tensor_check(preset("tensor_check"));
  report(worst_spec < 1e-10 && worst_fact < 1e-10 && worst_norm_excess <= 1e-10 && out.exit_code == 0 &&
             cfg.instances == 20,
         "tensor lemmas",
         fmt::format("d={}: max spectrum diff={:.2e}; {} factorization instances max dev={:.2e}; "
                     "max(lambda_max - prod norms)={:.2e}; tensor-check exit={}",
                     dims, worst_spec, cfg.instances, worst_fact, worst_norm_excess, out.exit_code));
}

void measures() {
  std::mt19937_64 eng(2024);
  std::uniform_int_distribution<int> size(1, 5);
  std::uniform_real_distribution<double> u(0.1, 3.0);
  auto draw = [&] {
    const int k = size(eng);
    std::vector<double> a(k), w(k);
    double total = 0;
    for (int i = 0; i < k; ++i) {
      a[i] = u(eng);
      w[i] = u(eng);
      total += w[i];
    }
    for (double& x : w) x /= total;
    return AtomicMeasure::atomic(a, w);
  };
  auto dist = [](const AtomicMeasure& x, const AtomicMeasure& y) {
    if (x.size() != y.size()) return std::numeric_limits<double>::infinity();
    double d = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
      d = std::max({d, std::abs(x.atoms()[i] - y.atoms()[i]), std::abs(x.weights()[i] - y.weights()[i])});
    return d;
  };
  std::vector<AtomicMeasure> ms;
  for (int i = 0; i < 50; ++i) ms.push_back(draw());
  double alg = 0, mom = 0;
  const auto one = AtomicMeasure::dirac(1.0);
  for (int i = 0; i < 50; ++i) {
    const auto& a = ms[i];
    const auto& b = ms[(i + 1) % 50];
    const auto& c = ms[(i + 2) % 50];
    alg = std::max({alg, dist(mult_convolve(a, b), mult_convolve(b, a)),
                    dist(mult_convolve(mult_convolve(a, b), c), mult_convolve(a, mult_convolve(b, c))),
                    dist(mult_convolve(a, one), a)});
    for (unsigned p = 1; p <= 4; ++p) {
      const double lhs = moment(mult_convolve(a, b), p);
      mom = std::max(mom, std::abs(lhs - moment(a, p) * moment(b, p)) / std::max(1.0, std::abs(lhs)));
    }
  }
  const auto fig3 = mult_convolve(AtomicMeasure::atomic(std::vector<double>{1, 2}, std::vector<double>{0.5, 0.5}),
                                  AtomicMeasure::atomic(std::vector<double>{1, 2, 3},
                                                        std::vector<double>{1. / 3, 1. / 3, 1. / 3}));
  const std::vector<double> atoms{1, 2, 3, 4, 6}, weights{1. / 6, 2. / 6, 1. / 6, 1. / 6, 1. / 6};
  double wdev = 0;
  for (std::size_t i = 0; i < std::min<std::size_t>(5, fig3.size()); ++i)
    wdev = std::max(wdev, std::abs(fig3.weights()[i] - weights[i]));
  const bool fig3_ok = fig3.atoms() == atoms && wdev < 1e-15;
  report(alg < 1e-12 && mom < 1e-10 && fig3_ok, "measure algebra",
         fmt::format("50 measures: max algebra dev={:.1e} (<1e-12); max moment rel dev={:.1e} (<1e-10); "
                     "fig3 law atoms {} weights max dev={:.1e}",
                     alg, mom, fig3.atoms() == atoms ? "exact" : "WRONG", wdev));
}

void concentration() {
  const auto out = cmd_concentration(preset("concentration"));
  const auto& ratios = out.summary["consecutive_ratios"];
  int below = 0;
  bool decreasing = true;
  std::string rs;
  for (const auto& r : ratios) {
    below += r.get<double>() < 0.75;
    decreasing = decreasing && r.get<double>() < 1.0;
    rs += fmt::format("{:.3f} ", r.get<double>());
  }
  const int d = 64, n = 64, trials = 10000;
  const std::vector<CovarianceMatrix> s{build_sigma(CovarianceSpec{IdentityCov{}, d})};
  const auto k1 = quadratic_form_concentration(s, RowDistribution::gaussian, TestOperatorKind::identity, n, trials, 77);
  const double expect = 2.0 * d / (static_cast<double>(n) * n);
  const double z = std::abs(k1.estimate - expect) / k1.std_error;
  report(below == 3 && ratios.size() == 3 && decreasing && z < 3.0, "concentration rate",
         fmt::format("k=2 d_min 8..64 ratios: {}(all < 0.75); k=1 d=n=64: {:.5f} vs 2d/n^2={:.5f} ({:.2f} SE)", rs,
                     k1.estimate, expect, z));
}

void determinism() {
  const std::vector<std::string> artifacts{"density.csv",   "theory.json",       "eigenvalues.csv",
                                           "report.json",   "histogram.csv",     "tensor_check.json",
                                           "concentration.csv", "concentration_summary.json"};
  auto snapshot = [&](const fs::path& dir) {
    std::vector<std::string> bytes;
    for (const auto& a : artifacts) bytes.push_back(fs::exists(dir / a) ? read_text_file(dir / a) : "");
    return bytes;
  };
  struct Job {
    std::string label;
    CommandOutcome (*fn)(const CommandContext&);
    CommandContext ctx;
  };
  auto small = preset("identity");
  small.overrides.n = 1200;
  std::vector<Job> jobs{{"theory", cmd_theory, preset("fig1")},
                        {"simulate", cmd_simulate, small},
                        {"compare", cmd_compare, preset("fig3")},
                        {"tensor-check", cmd_tensor_check, preset("tensor_check")},
                        {"concentration", cmd_concentration, preset("concentration")}};
  bool ok = true;
  std::string detail;
  for (auto& job : jobs) {
    const auto first = job.fn(job.ctx);
    const auto a = snapshot(first.dir);
    fs::remove_all(first.dir);
    const auto second = job.fn(job.ctx);
    const bool same = snapshot(second.dir) == a && second.dir == first.dir;
    ok = ok && same;
    detail += fmt::format("{} {}; ", job.label, same ? "identical" : "DIFFERS");
  }
  report(ok, "determinism", detail + "(CSV/JSON byte-compared across reruns)");
}

}  // namespace

int main() {
  guarded("measure algebra", measures);
  guarded("MP solver vs closed form", solver);
  guarded("tensor lemmas", tensor);
  guarded("concentration rate", concentration);
  guarded("fig1 reproduction", fig1);
  guarded("fig2-4 presets", figs234);
  guarded("identity sanity", identity);
  guarded("determinism", determinism);
  fmt::print("{} criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
