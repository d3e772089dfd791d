#include "hadamard/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

#include <fmt/format.h>

#include "hadamard/errors.hpp"

namespace hadamard {

LawView law_of(GridDensity gd) {
  auto shared = std::make_shared<const GridDensity>(std::move(gd));
  return {
      [shared](double x) { return theoretical_cdf(*shared, x); },
      [shared](double x) { return theoretical_cdf_left(*shared, x); },
      [shared](double p) { return theoretical_quantile(*shared, p); },
  };
}

LawView law_of(AtomicMeasure m) {
  auto shared = std::make_shared<const AtomicMeasure>(std::move(m));
  return {
      [shared](double x) { return cdf(*shared, x); },
      [shared](double x) { return cdf_left(*shared, x); },
      [shared](double p) { return quantile(*shared, p); },
  };
}

double ks_distance(std::span<const double> sorted, const LawView& law) {
  if (sorted.empty()) throw InvalidArgument("ks_distance: empty sample");
  const auto n = static_cast<double>(sorted.size());
  double sup = 0.0;
  std::size_t i = 0;
  while (i < sorted.size()) {
    const double x = sorted[i];
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == x) ++j;
    const double below = static_cast<double>(i) / n;   // empirical F(x-)
    const double upto = static_cast<double>(j) / n;    // empirical F(x)
    sup = std::max({sup, std::abs(upto - law.cdf(x)), std::abs(below - law.cdf_left(x))});
    i = j;
  }
  return std::min(sup, 1.0);
}

double wasserstein1(std::span<const double> sorted, const std::function<double(double)>& quantile) {
  if (sorted.empty()) throw InvalidArgument("wasserstein1: empty sample");
  const auto n = static_cast<double>(sorted.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i)
    acc += std::abs(sorted[i] - quantile((static_cast<double>(i) + 0.5) / n));
  return acc / n;
}

std::int64_t Histogram::total() const { return std::accumulate(counts.begin(), counts.end(), std::int64_t{0}); }

std::vector<double> Histogram::density() const {
  const auto n = static_cast<double>(total());
  std::vector<double> out(counts.size());
  for (std::size_t b = 0; b < counts.size(); ++b)
    out[b] = static_cast<double>(counts[b]) / (n * (edges[b + 1] - edges[b]));
  return out;
}

Histogram histogram(std::span<const double> values, int bins) {
  if (values.empty()) throw InvalidArgument("histogram: empty sample");
  if (bins < 1) throw InvalidArgument("histogram: bins must be >= 1");
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double pad = 1e-9 * std::max({1.0, std::abs(*lo_it), std::abs(*hi_it)});
  const double lo = *lo_it - pad;
  const double hi = *hi_it + pad;
  const double width = (hi - lo) / bins;

  Histogram h;
  h.edges.resize(static_cast<std::size_t>(bins) + 1);
  for (int b = 0; b <= bins; ++b) h.edges[static_cast<std::size_t>(b)] = lo + width * b;
  h.edges.back() = hi;
  h.counts.assign(static_cast<std::size_t>(bins), 0);
  for (double x : values) {
    auto b = static_cast<std::ptrdiff_t>(std::floor((x - lo) / width));
    b = std::clamp<std::ptrdiff_t>(b, 0, bins - 1);
    ++h.counts[static_cast<std::size_t>(b)];
  }
  return h;
}

int default_bins(std::span<const double> sorted) {
  if (sorted.size() < 2) return 30;
  const auto at = [&](double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
  };
  const double iqr = at(0.75) - at(0.25);
  const double range = sorted.back() - sorted.front();
  if (!(iqr > 0.0) || !(range > 0.0)) return 30;
  const double width = 2.0 * iqr / std::cbrt(static_cast<double>(sorted.size()));
  return std::max(30, static_cast<int>(std::ceil(range / width)));
}

std::string to_csv(const Histogram& h) {
  const auto dens = h.density();
  std::string out = "left,right,count,density\n";
  for (std::size_t b = 0; b < h.counts.size(); ++b)
    out += fmt::format("{:.17g},{:.17g},{},{:.17g}\n", h.edges[b], h.edges[b + 1], h.counts[b], dens[b]);
  return out;
}

std::vector<double> snap_kernel(std::span<const double> sorted, double threshold) {
  std::vector<double> out(sorted.begin(), sorted.end());
  for (double& x : out)
    if (std::abs(x) < threshold) x = 0.0;
  return out;
}

}  // namespace hadamard
