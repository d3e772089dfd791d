#include "hadamard/covmodel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "hadamard/errors.hpp"
#include "hadamard/rng.hpp"

namespace hadamard {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

constexpr double kZeroEigenvalue = 1e-12;

Eigen::MatrixXd atomic_matrix(const AtomicCov& a, int d) {
  const std::size_t m = a.values.size();
  std::vector<int> counts(m);
  int assigned = 0;
  for (std::size_t i = 0; i < m; ++i) {
    counts[i] = static_cast<int>(std::floor(a.proportions[i] * d + 1e-9));
    assigned += counts[i];
  }
  const auto largest = static_cast<std::size_t>(
      std::max_element(a.proportions.begin(), a.proportions.end()) - a.proportions.begin());
  counts[largest] += d - assigned;

  Eigen::VectorXd diag(d);
  int pos = 0;
  for (std::size_t i = 0; i < m; ++i)
    for (int c = 0; c < counts[i]; ++c) diag(pos++) = a.values[i];
  return diag.asDiagonal();
}

Eigen::MatrixXd toeplitz_matrix(double rho, int d) {
  Eigen::MatrixXd s(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) s(i, j) = std::pow(rho, std::abs(i - j));
  return s;
}

Eigen::MatrixXd wishart_matrix(const WishartCov& w, int d) {
  const int m = std::max(1, static_cast<int>(std::lround(d / w.gamma_prime)));
  Engine engine = make_engine(w.seed, {stream::kWishart});
  std::normal_distribution<double> normal;
  Eigen::MatrixXd g(d, m);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < d; ++i) g(i, j) = normal(engine);
  Eigen::MatrixXd s = (g * g.transpose()) / static_cast<double>(m);
  s = 0.5 * (s + s.transpose());
  s *= static_cast<double>(d) / s.trace();
  return s;
}

}  // namespace

void CovarianceSpec::validate() {
  if (d < 1) throw InvalidArgument(fmt::format("covariance spec: dimension d = {} must be >= 1", d));
  std::visit(Overloaded{
                 [](IdentityCov&) {},
                 [](AtomicCov& a) {
                   if (a.values.empty() || a.values.size() != a.proportions.size())
                     throw InvalidArgument("atomic covariance: values and proportions must be nonempty and equal length");
                   for (double v : a.values)
                     if (!(v > 0.0) || !std::isfinite(v))
                       throw InvalidArgument(fmt::format("atomic covariance: value {} must be positive", v));
                   double total = 0.0;
                   for (double p : a.proportions) {
                     if (!(p >= 0.0) || !std::isfinite(p))
                       throw InvalidArgument("atomic covariance: proportions must be nonnegative");
                     total += p;
                   }
                   if (!(total > 0.0)) throw InvalidArgument("atomic covariance: proportions sum to 0");
                   for (double& p : a.proportions) p /= total;
                 },
                 [](ToeplitzCov& t) {
                   if (!(std::abs(t.rho) < 1.0))
                     throw InvalidArgument(fmt::format("toeplitz covariance: |rho| = {} must be < 1", std::abs(t.rho)));
                 },
                 [](WishartCov& w) {
                   if (!(w.gamma_prime > 0.0) || !std::isfinite(w.gamma_prime))
                     throw InvalidArgument("wishart covariance: gamma_prime must be positive");
                 },
             },
             kind);
}

std::vector<double> spectrum(const Eigen::MatrixXd& sigma) {
  if (!sigma.allFinite()) throw InvalidArgument("spectrum: non-finite matrix entries");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw SolverError("spectrum: eigensolver did not converge", 0.0);
  std::vector<double> out(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  for (double& x : out)
    if (x < kZeroEigenvalue) x = 0.0;
  return out;
}

Eigen::MatrixXd sqrt_factor(const Eigen::MatrixXd& sigma) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma);
  if (es.info() != Eigen::Success) throw SolverError("sqrt_factor: eigensolver did not converge", 0.0);
  const double lo = es.eigenvalues().minCoeff();
  if (lo < -1e-8) throw InvalidArgument(fmt::format("sqrt_factor: matrix is indefinite (eigenvalue {})", lo));
  if (lo > kZeroEigenvalue) {
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() == Eigen::Success) return llt.matrixL();
  }
  const Eigen::VectorXd root =
      es.eigenvalues().unaryExpr([](double x) { return x < kZeroEigenvalue ? 0.0 : std::sqrt(x); });
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

CovarianceMatrix::CovarianceMatrix(Eigen::MatrixXd sigma) : sigma_(std::move(sigma)) {
  if (sigma_.rows() != sigma_.cols() || sigma_.rows() == 0)
    throw InvalidArgument("CovarianceMatrix: matrix must be square and nonempty");
  if (!sigma_.allFinite()) throw InvalidArgument("CovarianceMatrix: non-finite entries");
  if ((sigma_ - sigma_.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw InvalidArgument("CovarianceMatrix: matrix is not symmetric");
  spectrum_ = hadamard::spectrum(sigma_);
  factor_ = sqrt_factor(sigma_);
}

CovarianceMatrix build_sigma(CovarianceSpec spec) {
  spec.validate();
  const int d = spec.d;
  Eigen::MatrixXd s = std::visit(
      Overloaded{
          [d](const IdentityCov&) -> Eigen::MatrixXd { return Eigen::MatrixXd::Identity(d, d); },
          [d](const AtomicCov& a) { return atomic_matrix(a, d); },
          [d](const ToeplitzCov& t) { return toeplitz_matrix(t.rho, d); },
          [d](const WishartCov& w) { return wishart_matrix(w, d); },
      },
      spec.kind);
  return CovarianceMatrix(std::move(s));
}

std::optional<double> norm_bound(const CovarianceSpec& spec) {
  return std::visit(Overloaded{
                        [](const IdentityCov&) -> std::optional<double> { return 1.0; },
                        [](const AtomicCov& a) -> std::optional<double> {
                          return *std::max_element(a.values.begin(), a.values.end());
                        },
                        [](const ToeplitzCov& t) -> std::optional<double> {
                          return (1.0 + std::abs(t.rho)) / (1.0 - std::abs(t.rho));
                        },
                        [](const WishartCov&) -> std::optional<double> { return std::nullopt; },
                    },
                    spec.kind);
}

std::optional<AtomicMeasure> limit_measure(const CovarianceSpec& spec) {
  if (std::holds_alternative<IdentityCov>(spec.kind)) return AtomicMeasure::dirac(1.0);
  if (const auto* a = std::get_if<AtomicCov>(&spec.kind)) {
    const double total = std::accumulate(a->proportions.begin(), a->proportions.end(), 0.0);
    std::vector<double> w(a->proportions);
    for (double& x : w) x /= total;
    return AtomicMeasure::atomic(a->values, w);
  }
  return std::nullopt;
}

AtomicMeasure spectral_measure(const CovarianceMatrix& sigma) {
  return AtomicMeasure::from_covariance_spectrum(sigma.spectrum());
}

}  // namespace hadamard
