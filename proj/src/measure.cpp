#include "hadamard/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <fmt/format.h>
#include "json.hpp"

#include "hadamard/errors.hpp"

namespace hadamard {

namespace {

void require_finite(std::span<const double> v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x)) throw InvalidArgument(fmt::format("{}: non-finite value", what));
}

}  // namespace

AtomicMeasure AtomicMeasure::canonicalize(std::vector<double> atoms, std::vector<double> weights) {
  std::vector<std::size_t> order(atoms.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return atoms[a] < atoms[b]; });

  std::vector<double> merged_atoms;
  std::vector<double> merged_weights;
  merged_atoms.reserve(atoms.size());
  merged_weights.reserve(atoms.size());
  for (std::size_t idx : order) {
    if (weights[idx] == 0.0) continue;
    // Groups are anchored at their smallest member so merging never chains.
    if (!merged_atoms.empty() && atoms[idx] - merged_atoms.back() <= kMergeTolerance) {
      merged_weights.back() += weights[idx];
    } else {
      merged_atoms.push_back(atoms[idx]);
      merged_weights.push_back(weights[idx]);
    }
  }
  if (merged_atoms.empty()) throw InvalidArgument("measure has no positive weight");

  const double total = std::accumulate(merged_weights.begin(), merged_weights.end(), 0.0);
  for (double& w : merged_weights) w /= total;
  return AtomicMeasure(std::move(merged_atoms), std::move(merged_weights));
}

AtomicMeasure AtomicMeasure::atomic(std::span<const double> points, std::span<const double> weights) {
  if (points.empty()) throw InvalidArgument("atomic: empty point list");
  if (points.size() != weights.size())
    throw InvalidArgument(fmt::format("atomic: {} points but {} weights", points.size(), weights.size()));
  require_finite(points, "atomic points");
  require_finite(weights, "atomic weights");
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw InvalidArgument("atomic: negative weight");
    total += w;
  }
  if (total == 0.0) throw InvalidArgument("atomic: all weights are zero");
  if (std::abs(total - 1.0) > 1e-9)
    throw InvalidArgument(fmt::format("atomic: weights sum to {}, expected 1", total));
  return canonicalize({points.begin(), points.end()}, {weights.begin(), weights.end()});
}

AtomicMeasure AtomicMeasure::from_covariance_spectrum(std::span<const double> eigenvalues) {
  if (eigenvalues.empty()) throw InvalidArgument("from_covariance_spectrum: empty spectrum");
  require_finite(eigenvalues, "from_covariance_spectrum");
  for (double x : eigenvalues)
    if (x < 0.0) throw InvalidArgument(fmt::format("from_covariance_spectrum: negative eigenvalue {}", x));
  std::vector<double> w(eigenvalues.size(), 1.0 / static_cast<double>(eigenvalues.size()));
  return canonicalize({eigenvalues.begin(), eigenvalues.end()}, std::move(w));
}

AtomicMeasure AtomicMeasure::dirac(double at) {
  if (!std::isfinite(at)) throw InvalidArgument("dirac: non-finite location");
  return AtomicMeasure({at}, {1.0});
}

AtomicMeasure AtomicMeasure::restore(std::vector<double> atoms, std::vector<double> weights) {
  if (atoms.empty() || atoms.size() != weights.size())
    throw InvalidArgument("restore: empty measure or length mismatch");
  require_finite(atoms, "restore atoms");
  require_finite(weights, "restore weights");
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (!(weights[i] > 0.0)) throw InvalidArgument("restore: weights must be positive");
    if (i > 0 && !(atoms[i] - atoms[i - 1] > kMergeTolerance))
      throw InvalidArgument("restore: atoms not strictly increasing beyond merge tolerance");
  }
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-12) throw InvalidArgument("restore: weights do not sum to 1");
  return AtomicMeasure(std::move(atoms), std::move(weights));
}

double AtomicMeasure::total_mass() const {
  return std::accumulate(weights_.begin(), weights_.end(), 0.0);
}

double AtomicMeasure::mass_at_zero() const {
  for (std::size_t i = 0; i < atoms_.size(); ++i)
    if (std::abs(atoms_[i]) <= kMergeTolerance) return weights_[i];
  return 0.0;
}

AtomicMeasure mult_convolve(const AtomicMeasure& mu, const AtomicMeasure& nu) {
  std::vector<double> atoms;
  std::vector<double> weights;
  atoms.reserve(mu.size() * nu.size());
  weights.reserve(mu.size() * nu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) {
    for (std::size_t j = 0; j < nu.size(); ++j) {
      atoms.push_back(mu.atoms()[i] * nu.atoms()[j]);
      weights.push_back(mu.weights()[i] * nu.weights()[j]);
    }
  }
  return AtomicMeasure::canonicalize(std::move(atoms), std::move(weights));
}

AtomicMeasure mult_convolve_all(std::span<const AtomicMeasure> factors) {
  if (factors.empty()) throw InvalidArgument("mult_convolve_all: no factors");
  AtomicMeasure acc = factors.front();
  for (std::size_t i = 1; i < factors.size(); ++i) acc = mult_convolve(acc, factors[i]);
  return acc;
}

double cdf(const AtomicMeasure& m, double x) {
  if (!std::isfinite(x)) throw InvalidArgument("cdf: non-finite argument");
  const auto end = std::upper_bound(m.atoms().begin(), m.atoms().end(), x);
  const auto n = static_cast<std::size_t>(end - m.atoms().begin());
  const double f = std::accumulate(m.weights().begin(), m.weights().begin() + n, 0.0);
  return std::clamp(f, 0.0, 1.0);
}

double cdf_left(const AtomicMeasure& m, double x) {
  if (!std::isfinite(x)) throw InvalidArgument("cdf_left: non-finite argument");
  const auto end = std::lower_bound(m.atoms().begin(), m.atoms().end(), x);
  const auto n = static_cast<std::size_t>(end - m.atoms().begin());
  const double f = std::accumulate(m.weights().begin(), m.weights().begin() + n, 0.0);
  return std::clamp(f, 0.0, 1.0);
}

double quantile(const AtomicMeasure& m, double p) {
  double acc = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    acc += m.weights()[i];
    if (acc >= p) return m.atoms()[i];
  }
  return m.max_atom();
}

double moment(const AtomicMeasure& m, unsigned p) {
  double s = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    double a = 1.0;
    for (unsigned e = 0; e < p; ++e) a *= m.atoms()[i];
    s += m.weights()[i] * a;
  }
  return s;
}

std::string to_csv(const AtomicMeasure& m) {
  std::string out = "atom,weight\n";
  for (std::size_t i = 0; i < m.size(); ++i)
    out += fmt::format("{:.17g},{:.17g}\n", m.atoms()[i], m.weights()[i]);
  return out;
}

AtomicMeasure measure_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "atom,weight")
    throw InvalidArgument("measure csv: missing `atom,weight` header");
  std::vector<double> atoms;
  std::vector<double> weights;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw InvalidArgument("measure csv: malformed row: " + line);
    atoms.push_back(std::stod(line.substr(0, comma)));
    weights.push_back(std::stod(line.substr(comma + 1)));
  }
  return AtomicMeasure::restore(std::move(atoms), std::move(weights));
}

std::string to_json(const AtomicMeasure& m) {
  nlohmann::json j = nlohmann::json::array();
  for (std::size_t i = 0; i < m.size(); ++i) j.push_back({m.atoms()[i], m.weights()[i]});
  return j.dump();
}

AtomicMeasure measure_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  if (!j.is_array()) throw InvalidArgument("measure json: expected an array of [atom, weight]");
  std::vector<double> atoms;
  std::vector<double> weights;
  for (const auto& pair : j) {
    if (!pair.is_array() || pair.size() != 2)
      throw InvalidArgument("measure json: each entry must be [atom, weight]");
    atoms.push_back(pair[0].get<double>());
    weights.push_back(pair[1].get<double>());
  }
  return AtomicMeasure::restore(std::move(atoms), std::move(weights));
}

}  // namespace hadamard
