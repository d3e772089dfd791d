#include "hadamard/simulate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "hadamard/errors.hpp"
#include "hadamard/rng.hpp"

namespace hadamard {

RowDistribution parse_distribution(const std::string& name) {
  if (name == "gaussian") return RowDistribution::gaussian;
  if (name == "rademacher") return RowDistribution::rademacher;
  if (name == "uniform") return RowDistribution::uniform;
  throw InvalidArgument(fmt::format("unknown row distribution '{}' (gaussian|rademacher|uniform)", name));
}

std::string to_string(RowDistribution dist) {
  switch (dist) {
    case RowDistribution::gaussian: return "gaussian";
    case RowDistribution::rademacher: return "rademacher";
    case RowDistribution::uniform: return "uniform";
  }
  throw InvalidArgument("invalid row distribution");
}

double fourth_cumulant(RowDistribution dist) {
  switch (dist) {
    case RowDistribution::gaussian: return 0.0;
    case RowDistribution::rademacher: return -2.0;
    case RowDistribution::uniform: return -1.2;
  }
  throw InvalidArgument("invalid row distribution");
}

namespace {

struct Factorization {
  std::vector<int> factors;
  double ratio = std::numeric_limits<double>::infinity();
};

// Most balanced split of `product` into `k` nondecreasing factors >= lo.
void balanced_split(long product, int k, long lo, std::vector<int>& partial, Factorization& best) {
  if (k == 1) {
    if (product < lo) return;
    partial.push_back(static_cast<int>(product));
    const auto [mn, mx] = std::minmax_element(partial.begin(), partial.end());
    const double ratio = static_cast<double>(*mx) / static_cast<double>(*mn);
    if (ratio < best.ratio) best = {partial, ratio};
    partial.pop_back();
    return;
  }
  for (long f = lo; std::pow(static_cast<double>(f), k) <= static_cast<double>(product) + 0.5; ++f) {
    if (product % f != 0) continue;
    partial.push_back(static_cast<int>(f));
    balanced_split(product / f, k - 1, f, partial, best);
    partial.pop_back();
  }
}

Factorization factorize(long product, int k) {
  Factorization best;
  std::vector<int> partial;
  balanced_split(product, k, 2, partial, best);
  return best;
}

}  // namespace

std::vector<int> choose_dimensions(int n, double gamma, int k) {
  if (k < 1 || n < 2 || !(gamma > 0.0)) throw InvalidArgument("choose_dimensions: need k >= 1, n >= 2, gamma > 0");
  const long target = std::lround(n / gamma);
  Factorization exact = factorize(target, k);
  if (exact.ratio <= 2.0) return exact.factors;

  // Search outward for a product that still honors the 2% gamma window.
  Factorization best = exact;
  for (long offset = 1; offset <= target; ++offset) {
    bool in_window = false;
    for (long cand : {target - offset, target + offset}) {
      if (cand < 2) continue;
      if (std::abs(n / static_cast<double>(cand) - gamma) / gamma >= 0.02) continue;
      in_window = true;
      Factorization f = factorize(cand, k);
      if (f.ratio < best.ratio) best = f;
    }
    if (!in_window) break;
    if (best.ratio <= 2.0) break;
  }
  if (best.factors.empty())
    throw InvalidArgument(fmt::format("choose_dimensions: no {} factors >= 2 with product near {}", k, target));
  return best.factors;
}

void ExperimentConfig::validate() {
  if (k < 1) throw InvalidArgument(fmt::format("config: k = {} must be >= 1", k));
  if (n < 2) throw InvalidArgument(fmt::format("config: n = {} must be >= 2", n));
  if (n > max_n) throw InvalidArgument(fmt::format("config: n = {} exceeds max_n = {}", n, max_n));
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InvalidArgument("config: gamma must be positive");
  if (static_cast<int>(specs.size()) != k)
    throw InvalidArgument(fmt::format("config: {} covariance specs for k = {}", specs.size(), k));
  if (d.empty()) d = choose_dimensions(n, gamma, k);
  if (static_cast<int>(d.size()) != k)
    throw InvalidArgument(fmt::format("config: {} dimensions for k = {}", d.size(), k));
  for (int di : d)
    if (di < 2) throw InvalidArgument(fmt::format("config: dimension {} must be >= 2", di));
  if (replicas < 1) throw InvalidArgument("config: replicas must be >= 1");
  if (grid_points < 2) throw InvalidArgument("config: grid_points must be >= 2");
  if (!(eta >= 1e-6 && eta <= 1e-2)) throw InvalidArgument(fmt::format("config: eta = {} outside [1e-6, 1e-2]", eta));
  if (!(solver.tol > 0.0) || solver.max_iter < 1) throw InvalidArgument("config: tol and max_iter must be positive");
  if (theory_gamma && !(*theory_gamma > 0.0)) throw InvalidArgument("config: theory_gamma must be positive");
  if (bins < 0) throw InvalidArgument("config: bins must be >= 0");
  const double mismatch = std::abs(realized_gamma() - gamma) / gamma;
  if (!(mismatch < 0.02))
    throw InvalidArgument(fmt::format("config: n / prod(d) = {:.6g} is {:.2f}% away from gamma = {}",
                                      realized_gamma(), 100.0 * mismatch, gamma));
  for (int i = 0; i < k; ++i) {
    specs[static_cast<std::size_t>(i)].d = d[static_cast<std::size_t>(i)];
    specs[static_cast<std::size_t>(i)].validate();
  }
}

double ExperimentConfig::realized_gamma() const {
  double prod = 1.0;
  for (int di : d) prod *= di;
  return n / prod;
}

Eigen::MatrixXd sample_matrix(const CovarianceMatrix& sigma, int n, RowDistribution dist, std::uint64_t seed) {
  if (n < 1) throw InvalidArgument("sample_matrix: n must be >= 1");
  const int d = sigma.dim();
  Engine engine = make_engine(seed, {stream::kRows});
  Eigen::MatrixXd z(n, d);
  switch (dist) {
    case RowDistribution::gaussian: {
      std::normal_distribution<double> normal;
      for (int p = 0; p < n; ++p)
        for (int q = 0; q < d; ++q) z(p, q) = normal(engine);
      break;
    }
    case RowDistribution::rademacher: {
      std::bernoulli_distribution coin(0.5);
      for (int p = 0; p < n; ++p)
        for (int q = 0; q < d; ++q) z(p, q) = coin(engine) ? 1.0 : -1.0;
      break;
    }
    case RowDistribution::uniform: {
      const double a = std::sqrt(3.0);
      std::uniform_real_distribution<double> unif(-a, a);
      for (int p = 0; p < n; ++p)
        for (int q = 0; q < d; ++q) z(p, q) = unif(engine);
      break;
    }
  }
  return z * sigma.factor().transpose();
}

namespace {

void check_factors(std::span<const Eigen::MatrixXd> xs) {
  if (xs.empty()) throw InvalidArgument("hadamard_gram: no factor matrices");
  for (const auto& x : xs) {
    if (x.rows() != xs.front().rows())
      throw InvalidArgument(fmt::format("hadamard_gram: row counts differ ({} vs {})", x.rows(), xs.front().rows()));
    if (x.cols() < 1) throw InvalidArgument("hadamard_gram: factor with zero columns");
  }
}

}  // namespace

Eigen::MatrixXd hadamard_gram(std::span<const Eigen::MatrixXd> xs, int block) {
  check_factors(xs);
  if (block < 1) throw InvalidArgument("hadamard_gram: block width must be >= 1");
  const Eigen::Index n = xs.front().rows();
  const Eigen::Index blocks = (n + block - 1) / block;
  Eigen::MatrixXd m(n, n);

#pragma omp parallel for schedule(dynamic, 1)
  for (Eigen::Index b = 0; b < blocks; ++b) {
    const Eigen::Index c = b * block;
    const Eigen::Index w = std::min<Eigen::Index>(block, n - c);
    const Eigen::Index r = n - c;
    Eigen::MatrixXd tile = Eigen::MatrixXd::Ones(r, w);
    for (const auto& x : xs) {
      const double inv_d = 1.0 / static_cast<double>(x.cols());
      tile.array() *= (x.middleRows(c, r) * x.middleRows(c, w).transpose()).array() * inv_d;
    }
    m.block(c, c, r, w) = tile;
  }
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < j; ++i) m(i, j) = m(j, i);
  return m;
}

Eigen::MatrixXd hadamard_gram_reference(std::span<const Eigen::MatrixXd> xs) {
  check_factors(xs);
  const Eigen::Index n = xs.front().rows();
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index p = 0; p < n; ++p) {
    for (Eigen::Index q = 0; q < n; ++q) {
      double entry = 1.0;
      for (const auto& x : xs) {
        double dot = 0.0;
        for (Eigen::Index c = 0; c < x.cols(); ++c) dot += x(p, c) * x(q, c);
        entry *= dot / static_cast<double>(x.cols());
      }
      m(p, q) = entry;
    }
  }
  return m;
}

Esd esd(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols() || m.rows() == 0) throw InvalidArgument("esd: matrix must be square and nonempty");
  if (!m.allFinite()) throw InvalidArgument("esd: non-finite entries");
  const Eigen::Index n = m.rows();
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = j + 1; i < n; ++i)
      if (std::abs(m(i, j) - m(j, i)) > 1e-9) throw InvalidArgument("esd: matrix is not symmetric within 1e-9");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw SolverError("esd: symmetric eigensolver did not converge", 0.0);
  std::vector<double> eig(es.eigenvalues().data(), es.eigenvalues().data() + n);
  std::sort(eig.begin(), eig.end());
  std::vector<double> w(eig.size(), 1.0 / static_cast<double>(n));
  return {eig, AtomicMeasure::atomic(eig, w)};
}

std::vector<CovarianceMatrix> build_sigmas(const ExperimentConfig& cfg) {
  std::vector<CovarianceMatrix> sigmas;
  sigmas.reserve(cfg.specs.size());
  for (const auto& spec : cfg.specs) sigmas.push_back(build_sigma(spec));
  return sigmas;
}

TheoryResult realized_theory(const ExperimentConfig& cfg, std::span<const CovarianceMatrix> sigmas) {
  std::vector<AtomicMeasure> factors;
  TheoryResult out;
  for (const auto& s : sigmas) {
    factors.push_back(spectral_measure(s));
    out.factor_norms.push_back(s.norm());
  }
  out.nu = mult_convolve_all(factors);
  const double g = cfg.effective_theory_gamma();
  const auto grid = default_grid(out.nu, g, cfg.grid_points);
  out.density = gram_limit_density(out.nu, g, grid, cfg.eta, cfg.solver);
  return out;
}

SpectrumResult run_experiment(ExperimentConfig cfg) {
  const auto start = std::chrono::steady_clock::now();
  cfg.validate();
  const auto sigmas = build_sigmas(cfg);
  TheoryResult theory = realized_theory(cfg, sigmas);

  struct Replica {
    std::vector<double> eigenvalues;
    double trace_mismatch = 0.0;
    double mean_trace = 0.0;
    int rank = 0;
  };
  std::vector<Replica> replicas(static_cast<std::size_t>(cfg.replicas));
  std::exception_ptr failure;

#pragma omp parallel for schedule(dynamic, 1)
  for (int r = 0; r < cfg.replicas; ++r) {
    try {
      std::vector<Eigen::MatrixXd> xs;
      xs.reserve(sigmas.size());
      for (std::size_t i = 0; i < sigmas.size(); ++i)
        xs.push_back(sample_matrix(sigmas[i], cfg.n, cfg.dist,
                                   derive_seed(cfg.seed, {static_cast<std::uint64_t>(r), i})));
      const Eigen::MatrixXd m = hadamard_gram(xs);

      double direct = 0.0;
      for (int p = 0; p < cfg.n; ++p) {
        double entry = 1.0;
        for (const auto& x : xs) entry *= x.row(p).squaredNorm() / static_cast<double>(x.cols());
        direct += entry;
      }
      Replica& rep = replicas[static_cast<std::size_t>(r)];
      rep.mean_trace = m.trace() / cfg.n;
      rep.trace_mismatch = std::abs(m.trace() - direct) / cfg.n;
      rep.eigenvalues = esd(m).eigenvalues;
      rep.rank = static_cast<int>(
          std::count_if(rep.eigenvalues.begin(), rep.eigenvalues.end(), [](double x) { return x > 1e-8; }));
    } catch (...) {
#pragma omp critical(hadamard_replica_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  SpectrumResult res;
  for (const auto& rep : replicas) {
    res.eigenvalues.insert(res.eigenvalues.end(), rep.eigenvalues.begin(), rep.eigenvalues.end());
    res.max_trace_mismatch = std::max(res.max_trace_mismatch, rep.trace_mismatch);
    res.mean_trace += rep.mean_trace / cfg.replicas;
    res.numerical_rank_max = std::max(res.numerical_rank_max, rep.rank);
  }
  std::sort(res.eigenvalues.begin(), res.eigenvalues.end());
  res.min_eigenvalue = res.eigenvalues.front();

  const auto snapped = snap_kernel(res.eigenvalues);
  const LawView law = law_of(theory.density);
  res.ks = ks_distance(snapped, law);
  res.w1 = wasserstein1(snapped, law.quantile);
  res.hist = histogram(snapped, cfg.bins > 0 ? cfg.bins : default_bins(snapped));
  res.theory = std::move(theory.density);
  res.nu = std::move(theory.nu);
  res.factor_norms = std::move(theory.factor_norms);
  res.norm_bound = *std::max_element(res.factor_norms.begin(), res.factor_norms.end());
  res.realized_gamma = cfg.realized_gamma();
  res.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

}  // namespace hadamard
