#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hadamard/covmodel.hpp"
#include "hadamard/measure.hpp"
#include "hadamard/metrics.hpp"
#include "hadamard/stieltjes.hpp"

namespace hadamard {

/// Entry law of the i.i.d. vector z in x = L z, standardized to mean 0 and
/// variance 1.
enum class RowDistribution { gaussian, rademacher, uniform };

RowDistribution parse_distribution(const std::string& name);
std::string to_string(RowDistribution dist);
/// Fourth cumulant of one standardized entry: 0, -2 and -1.2.
double fourth_cumulant(RowDistribution dist);

struct ExperimentConfig {
  int k = 0;
  int n = 0;
  double gamma = 0.0;
  std::vector<int> d;
  std::vector<CovarianceSpec> specs;  // specs[i].d == d[i] after validate()
  RowDistribution dist = RowDistribution::gaussian;
  std::uint64_t seed = 0;
  int replicas = 1;
  int grid_points = 2001;
  double eta = 1e-4;
  SolverOptions solver;
  // Shape ratio used for the theoretical curve; defaults to gamma. Setting it
  // to something else gives a deliberately mismatched comparison.
  std::optional<double> theory_gamma;
  int max_n = 6000;
  int bins = 0;  // 0 selects Freedman-Diaconis

  /// Fills d from (n, gamma) when empty, propagates d into the specs and
  /// checks every invariant. Throws InvalidArgument.
  void validate();

  double realized_gamma() const;
  double effective_theory_gamma() const { return theory_gamma.value_or(gamma); }
};

/// k factor dimensions, each >= 2 and as equal as possible, whose product is
/// round(n / gamma). When that product has no balanced factorization (e.g.
/// it is prime) nearby products inside the 2% gamma window are searched.
std::vector<int> choose_dimensions(int n, double gamma, int k);

/// n x d matrix whose rows are L z_p, z_p i.i.d. standardized entries drawn
/// from the stream seeded by `seed`. Identical seeds give identical output.
Eigen::MatrixXd sample_matrix(const CovarianceMatrix& sigma, int n, RowDistribution dist,
                              std::uint64_t seed);

/// M_pq = prod_i <x_p^(i), x_q^(i)> / d_i, assembled over column blocks of
/// width `block` in parallel. Only the lower triangle is computed and then
/// mirrored, so M is exactly symmetric.
Eigen::MatrixXd hadamard_gram(std::span<const Eigen::MatrixXd> xs, int block = 64);

/// Entry-by-entry serial reference for hadamard_gram.
Eigen::MatrixXd hadamard_gram_reference(std::span<const Eigen::MatrixXd> xs);

struct Esd {
  std::vector<double> eigenvalues;  // ascending
  AtomicMeasure measure;            // weight 1/n per eigenvalue
};

/// Full symmetric eigendecomposition (values only).
Esd esd(const Eigen::MatrixXd& m);

struct SpectrumResult {
  std::vector<double> eigenvalues;  // pooled over replicas, ascending
  Histogram hist;
  double ks = 0.0;
  double w1 = 0.0;
  GridDensity theory;
  AtomicMeasure nu = AtomicMeasure::dirac(1.0);  // realized mu_1 * ... * mu_k
  double realized_gamma = 0.0;
  double norm_bound = 0.0;               // C = max_i ||Sigma_i||, realized
  std::vector<double> factor_norms;      // ||Sigma_i||
  double min_eigenvalue = 0.0;
  double max_trace_mismatch = 0.0;       // |tr(M) - sum_p prod_i |x_p|^2/d_i| / n
  double mean_trace = 0.0;               // tr(M) / n averaged over replicas
  int numerical_rank_max = 0;            // eigenvalues above 1e-8, max over replicas
  double wall_time_s = 0.0;
};

/// Theoretical law for a config: Gram limit (gram_limit_density) at the theory
/// gamma of the multiplicative convolution of the realized covariance spectra.
struct TheoryResult {
  AtomicMeasure nu = AtomicMeasure::dirac(1.0);
  GridDensity density;
  std::vector<double> factor_norms;
};

TheoryResult realized_theory(const ExperimentConfig& cfg, std::span<const CovarianceMatrix> sigmas);

std::vector<CovarianceMatrix> build_sigmas(const ExperimentConfig& cfg);

/// Simulates `replicas` independent realizations of M (in parallel, merged in
/// replica order), pools their spectra and compares them with the theory.
SpectrumResult run_experiment(ExperimentConfig cfg);

}  // namespace hadamard
