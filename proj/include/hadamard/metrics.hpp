#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hadamard/measure.hpp"
#include "hadamard/stieltjes.hpp"

namespace hadamard {

/// A one-dimensional law seen through its CDF, left-limit CDF and quantile
/// function. The left limit matters only at atoms.
struct LawView {
  std::function<double(double)> cdf;
  std::function<double(double)> cdf_left;
  std::function<double(double)> quantile;
};

LawView law_of(GridDensity gd);
LawView law_of(AtomicMeasure m);

/// Kolmogorov-Smirnov distance between the empirical law of a sorted sample
/// and `law`, using both one-sided empirical CDF values at every sample point.
double ks_distance(std::span<const double> sorted, const LawView& law);

/// (1/n) sum_i |x_(i) - Q((i - 1/2) / n)|.
double wasserstein1(std::span<const double> sorted, const std::function<double(double)>& quantile);

struct Histogram {
  std::vector<double> edges;         // B + 1 strictly increasing
  std::vector<std::int64_t> counts;  // B

  std::int64_t total() const;
  /// count / (n * width) per bin.
  std::vector<double> density() const;
};

/// Equal-width bins over [min - eps, max + eps].
Histogram histogram(std::span<const double> values, int bins);

/// Freedman-Diaconis bin count with a floor of 30.
int default_bins(std::span<const double> sorted);

/// CSV with header `left,right,count,density`.
std::string to_csv(const Histogram& h);

/// Copy of a sorted spectrum with |x| < threshold snapped to 0, so that the
/// numerical kernel of a rank-deficient matrix lines up with an atom at 0.
std::vector<double> snap_kernel(std::span<const double> sorted, double threshold = 1e-8);

}  // namespace hadamard
