#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace hadamard {

/// Finitely supported probability measure on the real line.
///
/// Always canonical: atoms strictly increasing, atoms closer than
/// `kMergeTolerance` merged with their weights added, all weights positive and
/// renormalized to total mass one. Instances are immutable.
class AtomicMeasure {
 public:
  static constexpr double kMergeTolerance = 1e-12;

  /// Builds a canonical measure. Weights must sum to one within 1e-9.
  static AtomicMeasure atomic(std::span<const double> points, std::span<const double> weights);

  /// Weight 1/d on each eigenvalue of a d x d PSD matrix.
  static AtomicMeasure from_covariance_spectrum(std::span<const double> eigenvalues);

  static AtomicMeasure dirac(double at);

  /// Restores a measure that is already canonical (e.g. read back from disk)
  /// without touching its weights, so serialization round-trips exactly.
  static AtomicMeasure restore(std::vector<double> atoms, std::vector<double> weights);

  const std::vector<double>& atoms() const noexcept { return atoms_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  std::size_t size() const noexcept { return atoms_.size(); }

  double total_mass() const;
  double max_atom() const { return atoms_.back(); }
  double min_atom() const { return atoms_.front(); }
  /// Weight carried by the atom at 0 (within the merge tolerance), else 0.
  double mass_at_zero() const;

  friend bool operator==(const AtomicMeasure&, const AtomicMeasure&) = default;

 private:
  AtomicMeasure(std::vector<double> atoms, std::vector<double> weights)
      : atoms_(std::move(atoms)), weights_(std::move(weights)) {}

  // Sorts, merges and renormalizes (atom, weight) pairs without checking the
  // input mass. Shared by the public constructors and by mult_convolve.
  static AtomicMeasure canonicalize(std::vector<double> atoms, std::vector<double> weights);

  friend AtomicMeasure mult_convolve(const AtomicMeasure&, const AtomicMeasure&);

  std::vector<double> atoms_;
  std::vector<double> weights_;
};

/// Law of XY for independent X ~ mu, Y ~ nu.
AtomicMeasure mult_convolve(const AtomicMeasure& mu, const AtomicMeasure& nu);

/// Left-to-right fold of mult_convolve; requires a nonempty list.
AtomicMeasure mult_convolve_all(std::span<const AtomicMeasure> factors);

/// Right-continuous CDF F(x) = sum of weights at atoms <= x.
double cdf(const AtomicMeasure& m, double x);
/// Left limit F(x-) = sum of weights at atoms < x.
double cdf_left(const AtomicMeasure& m, double x);
/// Smallest atom a with F(a) >= p, for p in (0, 1].
double quantile(const AtomicMeasure& m, double p);

double moment(const AtomicMeasure& m, unsigned p);

// Two-column CSV with header `atom,weight`, 17 significant digits.
std::string to_csv(const AtomicMeasure& m);
AtomicMeasure measure_from_csv(const std::string& text);
// JSON array of [atom, weight] pairs.
std::string to_json(const AtomicMeasure& m);
AtomicMeasure measure_from_json(const std::string& text);

}  // namespace hadamard
