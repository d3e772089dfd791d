#pragma once

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "hadamard/measure.hpp"

namespace hadamard {

struct IdentityCov {};

/// Diagonal covariance with `values` repeated in the given proportions.
struct AtomicCov {
  std::vector<double> values;
  std::vector<double> proportions;  // normalized on construction of the spec
};

/// Sigma_ij = rho^|i - j|.
struct ToeplitzCov {
  double rho = 0.0;
};

/// (1/m) G G^T for a seeded d x m Gaussian G, m = round(d / gamma_prime),
/// rescaled to unit mean eigenvalue.
struct WishartCov {
  double gamma_prime = 1.0;
  std::uint64_t seed = 0;
};

using CovarianceKind = std::variant<IdentityCov, AtomicCov, ToeplitzCov, WishartCov>;

struct CovarianceSpec {
  CovarianceKind kind;
  int d = 1;

  /// Checks the per-kind invariants and normalizes atomic proportions.
  /// Throws InvalidArgument.
  void validate();
};

/// Dense symmetric PSD d x d matrix with its spectrum and a square-root
/// factor computed once at construction.
class CovarianceMatrix {
 public:
  explicit CovarianceMatrix(Eigen::MatrixXd sigma);

  const Eigen::MatrixXd& matrix() const noexcept { return sigma_; }
  /// Ascending eigenvalues; values below 1e-12 in magnitude are exactly 0.
  const std::vector<double>& spectrum() const noexcept { return spectrum_; }
  /// L with L L^T = Sigma.
  const Eigen::MatrixXd& factor() const noexcept { return factor_; }
  double norm() const noexcept { return spectrum_.back(); }
  int dim() const noexcept { return static_cast<int>(sigma_.rows()); }

 private:
  Eigen::MatrixXd sigma_;
  std::vector<double> spectrum_;
  Eigen::MatrixXd factor_;
};

CovarianceMatrix build_sigma(CovarianceSpec spec);

/// Cholesky factor when strictly positive definite, symmetric eigen square
/// root otherwise. Throws InvalidArgument on an eigenvalue below -1e-8.
Eigen::MatrixXd sqrt_factor(const Eigen::MatrixXd& sigma);

/// Ascending eigenvalues with negative rounding noise clipped at 0.
std::vector<double> spectrum(const Eigen::MatrixXd& sigma);

/// A priori bound on ||Sigma||: max value (atomic), (1+|rho|)/(1-|rho|)
/// (Toeplitz), 1 (identity); nullopt for Wishart, where it is recorded
/// from the realized matrix instead.
std::optional<double> norm_bound(const CovarianceSpec& spec);

/// Exact limiting spectral law where the kind defines one (identity and
/// atomic); nullopt otherwise.
std::optional<AtomicMeasure> limit_measure(const CovarianceSpec& spec);

/// Empirical spectral measure of a realized covariance.
AtomicMeasure spectral_measure(const CovarianceMatrix& sigma);

}  // namespace hadamard
