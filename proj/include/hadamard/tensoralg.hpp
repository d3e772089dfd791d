#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hadamard/covmodel.hpp"
#include "hadamard/simulate.hpp"

namespace hadamard {

/// Largest |d| = prod d_i handled by the dense tensor routines.
inline constexpr long kTensorSizeCap = 4096;

/// Row-major flattening of (u_1, ..., u_k), u_i in [0, d_i).
long flatten(std::span<const int> u, std::span<const int> dims);
std::vector<int> unflatten(long index, std::span<const int> dims);
long tensor_size(std::span<const int> dims);

/// Dense |d| x |d| operator on R^{d_1} (x) ... (x) R^{d_k}, indexed by
/// flattened multi-indices.
struct FlattenedTensorOperator {
  std::vector<int> dims;
  Eigen::MatrixXd matrix;
};

/// Covariance tensor: entry (u, v) = prod_i sigma^(i)_{u_i v_i}.
FlattenedTensorOperator braid(std::span<const Eigen::MatrixXd> factors);
FlattenedTensorOperator braid(std::span<const CovarianceMatrix> sigmas);

/// All products prod_i lambda^(i)_{p_i} of per-factor eigenvalues, ascending.
std::vector<double> tensor_spectrum_oracle(std::span<const CovarianceMatrix> sigmas);

/// |d| x n matrix whose column p is x_p^(1) (x) ... (x) x_p^(k).
Eigen::MatrixXd tensor_columns(std::span<const Eigen::MatrixXd> xs);

/// max |(1/|d|) A^T A - hadamard_gram(xs)| for the tensor-column matrix A.
double tensor_columns_check(std::span<const Eigen::MatrixXd> xs);

enum class TestOperatorKind { identity, braid_random_psd, random_symmetric };

TestOperatorKind parse_test_operator(const std::string& name);
std::string to_string(TestOperatorKind kind);

/// Deterministic test operator B with spectral norm 1.
///
/// identity and braid_random_psd keep their Kronecker structure, so quadratic
/// forms in tensor columns factor into per-factor forms; random_symmetric is
/// stored densely.
struct TestOperator {
  TestOperatorKind kind = TestOperatorKind::identity;
  std::vector<int> dims;
  std::vector<Eigen::MatrixXd> factors;  // braid_random_psd: B = braid(factors)
  Eigen::MatrixXd dense;                 // random_symmetric

  /// Dense |d| x |d| form of B (size-capped).
  Eigen::MatrixXd to_dense() const;
};

TestOperator make_test_operator(TestOperatorKind kind, std::span<const int> dims, std::uint64_t seed);

/// a^T B a for the tensor column a = x^(1) (x) ... (x) x^(k).
double quadratic_form(const TestOperator& b, std::span<const Eigen::VectorXd> xs);

/// Tr(B T) for T = braid(sigmas), using the factorized identity
/// prod_i Tr(B_i Sigma_i) where B has Kronecker structure.
double trace_against(const TestOperator& b, std::span<const CovarianceMatrix> sigmas);

struct ConcentrationEstimate {
  double estimate = 0.0;  // mean of (a^T B a - Tr(B T))^2 / n^2
  double std_error = 0.0;
};

/// Monte-Carlo estimate of (1/n^2) E |a^T B a - Tr(B T)|^2 over `trials`
/// independent tensor columns. Trials run in parallel on seed-derived streams
/// and are reduced in trial order.
ConcentrationEstimate quadratic_form_concentration(std::span<const CovarianceMatrix> sigmas,
                                                   RowDistribution dist, TestOperatorKind kind, int n,
                                                   int trials, std::uint64_t seed);

/// Single-threaded reference for quadratic_form_concentration.
ConcentrationEstimate quadratic_form_concentration_serial(std::span<const CovarianceMatrix> sigmas,
                                                          RowDistribution dist, TestOperatorKind kind,
                                                          int n, int trials, std::uint64_t seed);

struct ConcentrationRow {
  int k = 0;
  int d_min = 0;
  int n = 0;
  int trials = 0;
  double estimate = 0.0;
  double std_error = 0.0;
};

struct ConcentrationSweep {
  int k = 2;
  std::vector<int> d_mins;
  std::vector<CovarianceSpec> specs;  // one per factor, built at d = d_min
  RowDistribution dist = RowDistribution::gaussian;
  TestOperatorKind b_choice = TestOperatorKind::identity;
  double gamma = 1.0;  // n = round(gamma * d_min^k)
  int trials = 10000;
  std::uint64_t seed = 0;
};

std::vector<ConcentrationRow> run_concentration_sweep(const ConcentrationSweep& sweep);

/// CSV with header `k,d_min,n,trials,estimate,stderr`.
std::string to_csv(std::span<const ConcentrationRow> rows);

}  // namespace hadamard
