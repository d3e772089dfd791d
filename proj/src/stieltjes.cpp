#include "hadamard/stieltjes.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "hadamard/errors.hpp"

namespace hadamard {

HalfPlanePoint::HalfPlanePoint(double re, double im) : re_(re), im_(im) {
  if (!std::isfinite(re) || !std::isfinite(im))
    throw InvalidArgument("HalfPlanePoint: non-finite component");
  if (!(im > 0.0))
    throw InvalidArgument(fmt::format("HalfPlanePoint: Im z = {} is not in the open upper half plane", im));
}

Complex stieltjes_transform(const AtomicMeasure& m, HalfPlanePoint z) {
  Complex s{0.0, 0.0};
  for (std::size_t i = 0; i < m.size(); ++i) s += m.weights()[i] / (m.atoms()[i] - z.z());
  return s;
}

namespace {

struct RhsEval {
  Complex value;
  Complex derivative;  // dF/ds
};

RhsEval eval_rhs(const AtomicMeasure& nu, double gamma, Complex z, Complex s) {
  const Complex c = 1.0 - gamma * (1.0 + z * s);
  const Complex dc = -gamma * z;
  Complex f{0.0, 0.0};
  Complex df{0.0, 0.0};
  for (std::size_t i = 0; i < nu.size(); ++i) {
    const double t = nu.atoms()[i];
    const Complex inv = 1.0 / (t * c - z);
    f += nu.weights()[i] * inv;
    df -= nu.weights()[i] * t * dc * inv * inv;
  }
  return {f, df};
}

bool usable(Complex s) { return std::isfinite(s.real()) && std::isfinite(s.imag()) && s.imag() > 0.0; }

double scale_of(Complex s) { return std::max(1.0, std::abs(s)); }

struct LevelOutcome {
  bool ok = false;
  Complex s;
  double residual = 0.0;
  int iterations = 0;
};

LevelOutcome newton_level(const AtomicMeasure& nu, double gamma, Complex z, Complex s, double tol) {
  LevelOutcome out;
  RhsEval f = eval_rhs(nu, gamma, z, s);
  double residual = std::abs(s - f.value);
  for (int it = 0; it < 100; ++it) {
    out.iterations = it + 1;
    if (residual <= tol * scale_of(s)) {
      out.ok = usable(s);
      break;
    }
    const Complex step = (s - f.value) / (1.0 - f.derivative);
    // Backtrack so that the iterate stays on the Herglotz branch and the
    // residual decreases.
    double lambda = 1.0;
    bool accepted = false;
    for (int bt = 0; bt < 40; ++bt, lambda *= 0.5) {
      const Complex trial = s - lambda * step;
      if (!usable(trial)) continue;
      const RhsEval ft = eval_rhs(nu, gamma, z, trial);
      const double r = std::abs(trial - ft.value);
      if (std::isfinite(r) && r < residual) {
        s = trial;
        f = ft;
        residual = r;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  out.s = s;
  out.residual = residual;
  return out;
}

LevelOutcome damped_level(const AtomicMeasure& nu, double gamma, Complex z, Complex s, double alpha,
                          double tol, int max_iter) {
  LevelOutcome out;
  double residual = std::abs(s - eval_rhs(nu, gamma, z, s).value);
  for (int it = 0; it < max_iter; ++it) {
    out.iterations = it + 1;
    const Complex next = (1.0 - alpha) * s + alpha * eval_rhs(nu, gamma, z, s).value;
    const double r = usable(next) ? std::abs(next - eval_rhs(nu, gamma, z, next).value)
                                  : std::numeric_limits<double>::infinity();
    if (!(r <= residual)) {
      alpha *= 0.5;
      if (alpha < 1e-12) break;
      continue;
    }
    const double step = std::abs(next - s);
    s = next;
    residual = r;
    if (step <= tol * scale_of(s) && residual <= tol * scale_of(s)) {
      out.ok = usable(s);
      break;
    }
  }
  out.s = s;
  out.residual = residual;
  return out;
}

}  // namespace

Complex mp_boxtimes_rhs(const AtomicMeasure& nu, double gamma, Complex z, Complex s) {
  return eval_rhs(nu, gamma, z, s).value;
}

SolverResult mp_boxtimes_solve(const AtomicMeasure& nu, double gamma, HalfPlanePoint z,
                               const SolverOptions& opts) {
  if (!(gamma > 0.0) || !std::isfinite(gamma))
    throw InvalidArgument(fmt::format("mp_boxtimes_solve: gamma = {} must be positive", gamma));
  if (nu.min_atom() < 0.0) throw InvalidArgument("mp_boxtimes_solve: nu must be supported on [0, inf)");

  const double radius = 1.0 + (1.0 + std::sqrt(gamma)) * (1.0 + std::sqrt(gamma)) * nu.max_atom();
  const double target = z.im();

  SolverResult result;
  double eta = std::max(target, radius);
  Complex s = -1.0 / Complex(z.re(), eta);
  bool first = true;
  double ratio = 0.25;
  // The zero atom contributes -atom / z, which blows up near z = 0; carry that
  // term across levels so the starting point stays inside Newton's basin.
  const double atom = mp_boxtimes_zero_atom(nu, gamma);
  while (true) {
    const double next_eta = first ? eta : std::max(target, eta * ratio);
    const Complex zl(z.re(), next_eta);
    const Complex guess = first ? s : s - atom / zl + atom / Complex(z.re(), eta);
    LevelOutcome level = newton_level(nu, gamma, zl, usable(guess) ? guess : s, opts.tol);
    result.iterations += level.iterations;
    if (!level.ok && ratio < 0.95) {
      // Newton left its basin: retry from the last good level with a smaller step.
      ratio = std::sqrt(ratio);
      continue;
    }
    if (!level.ok) {
      level = damped_level(nu, gamma, zl, s, 1.0, opts.tol, opts.max_iter);
      result.iterations += level.iterations;
    }
    if (!level.ok) {
      level = damped_level(nu, gamma, zl, Complex(0.0, 1.0 / next_eta), 0.1, opts.tol, opts.max_iter);
      result.iterations += level.iterations;
    }
    if (!level.ok) {
      throw SolverError(fmt::format("MP map solver did not converge at z = {} + {}i (level Im = {}), "
                                    "last residual {:.3e}",
                                    z.re(), z.im(), next_eta, level.residual),
                        level.residual);
    }
    s = level.s;
    eta = next_eta;
    first = false;
    if (eta == target) {
      result.s = s;
      result.residual = level.residual;
      return result;
    }
    ratio = std::max(0.25, ratio * ratio);
  }
}

Complex mp_boxtimes_stieltjes(const AtomicMeasure& nu, double gamma, HalfPlanePoint z,
                              const SolverOptions& opts) {
  return mp_boxtimes_solve(nu, gamma, z, opts).s;
}

double mp_boxtimes_zero_atom(const AtomicMeasure& nu, double gamma) {
  if (!(gamma > 0.0)) throw InvalidArgument("mp_boxtimes_zero_atom: gamma must be positive");
  return std::max(nu.mass_at_zero(), 1.0 - 1.0 / gamma);
}

Complex gram_limit_stieltjes(const AtomicMeasure& nu, double gamma, HalfPlanePoint z, const SolverOptions& opts) {
  if (!(gamma > 0.0)) throw InvalidArgument("gram_limit_stieltjes: gamma must be positive");
  const Complex s = mp_boxtimes_stieltjes(nu, 1.0 / gamma, HalfPlanePoint(z.re() / gamma, z.im() / gamma), opts);
  return s / (gamma * gamma) + (1.0 / gamma - 1.0) / z.z();
}

double gram_limit_zero_atom(const AtomicMeasure& nu, double gamma) {
  if (!(gamma > 0.0)) throw InvalidArgument("gram_limit_zero_atom: gamma must be positive");
  return std::max(0.0, 1.0 - (1.0 - nu.mass_at_zero()) / gamma);
}

MpEdges mp_edges(double gamma) {
  const double r = std::sqrt(gamma);
  return {(1.0 - r) * (1.0 - r), (1.0 + r) * (1.0 + r)};
}

double mp_closed_form_density(double gamma, double x) {
  if (!(gamma > 0.0)) throw InvalidArgument("mp_closed_form_density: gamma must be positive");
  const auto [a, b] = mp_edges(gamma);
  if (!(x > 0.0) || x < a || x > b) return 0.0;
  return std::sqrt((b - x) * (x - a)) / (2.0 * std::numbers::pi * gamma * x);
}

double mp_zero_atom(double gamma) { return std::max(0.0, 1.0 - 1.0 / gamma); }

namespace {

// Mass of cell [xs[i-1], xs[i]]: trapezoid, except that a hard edge at 0
// (pdf ~ x^-a) makes pdf(0) ~ eta^-a and the trapezoid over the first cell
// overshoots by about pdf(0) x_1 / 2. That cell is integrated against the
// power law fitted through x_1 and x_2 instead.
double cell_mass(std::span<const double> xs, std::span<const double> pdf, std::size_t i) {
  if (i == 1 && xs.size() >= 3 && pdf[0] > pdf[1] && pdf[1] > pdf[2] && pdf[2] > 0.0) {
    const double a = std::clamp(std::log(pdf[1] / pdf[2]) / std::log(xs[2] / xs[1]), 0.0, 0.9);
    return pdf[1] * (xs[1] - xs[0]) / (1.0 - a);
  }
  return 0.5 * (pdf[i] + pdf[i - 1]) * (xs[i] - xs[i - 1]);
}

}  // namespace

double GridDensity::continuous_mass() const {
  double m = 0.0;
  for (std::size_t i = 1; i < xs.size(); ++i) m += cell_mass(xs, pdf, i);
  return m;
}

std::vector<double> default_grid(const AtomicMeasure& nu, double gamma, int points) {
  if (points < 2) throw InvalidArgument("default_grid: need at least 2 points");
  const double upper = 1.1 * (1.0 + std::sqrt(gamma)) * (1.0 + std::sqrt(gamma)) * nu.max_atom();
  std::vector<double> xs(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) xs[static_cast<std::size_t>(i)] = upper * i / (points - 1);
  return xs;
}

namespace {

void validate_density_inputs(const AtomicMeasure& nu, double gamma, std::span<const double> xs,
                             double eta) {
  if (!(gamma > 0.0)) throw InvalidArgument("mp_boxtimes_density: gamma must be positive");
  if (!(eta >= 1e-6 && eta <= 1e-2))
    throw InvalidArgument(fmt::format("mp_boxtimes_density: eta = {} outside [1e-6, 1e-2]", eta));
  if (xs.size() < 2) throw InvalidArgument("mp_boxtimes_density: grid needs at least 2 points");
  if (xs.front() != 0.0) throw InvalidArgument("mp_boxtimes_density: grid must start at 0");
  for (std::size_t i = 1; i < xs.size(); ++i)
    if (!(xs[i] > xs[i - 1])) throw InvalidArgument("mp_boxtimes_density: grid not strictly increasing");
  if (nu.max_atom() <= 0.0) throw InvalidArgument("mp_boxtimes_density: nu is the point mass at 0");
}

// Continuous-part density at x with the zero-atom Lorentzian removed; may be
// slightly negative from inversion noise.
using StieltjesFn = Complex (*)(const AtomicMeasure&, double, HalfPlanePoint, const SolverOptions&);

double raw_density(StieltjesFn fn, const AtomicMeasure& nu, double gamma, double x, double eta, double atom,
                   const SolverOptions& opts) {
  const Complex s = fn(nu, gamma, HalfPlanePoint(x, eta), opts);
  const double lorentz = atom * eta / (x * x + eta * eta);
  return (s.imag() - lorentz) / std::numbers::pi;
}

GridDensity finish_density(std::span<const double> xs, std::vector<double> raw, double atom) {
  GridDensity gd;
  gd.xs.assign(xs.begin(), xs.end());
  gd.zero_atom = atom;
  gd.pdf.resize(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] < 0.0) gd.max_clipped = std::max(gd.max_clipped, -raw[i]);
    gd.pdf[i] = std::max(0.0, raw[i]);
  }
  if (gd.pdf.back() > 1e-4)
    throw InvalidArgument(fmt::format("mp_boxtimes_density: pdf({}) = {} > 1e-4; grid does not cover the support",
                                      gd.xs.back(), gd.pdf.back()));
  gd.cdf.resize(raw.size());
  gd.cdf[0] = atom;
  for (std::size_t i = 1; i < gd.xs.size(); ++i) gd.cdf[i] = gd.cdf[i - 1] + cell_mass(gd.xs, gd.pdf, i);
  for (double& c : gd.cdf) c = std::min(c, 1.0);
  return gd;
}

GridDensity density_parallel(StieltjesFn fn, const AtomicMeasure& nu, double gamma, std::span<const double> xs,
                             double eta, double atom, const SolverOptions& opts) {
  validate_density_inputs(nu, gamma, xs, eta);
  const auto n = static_cast<std::ptrdiff_t>(xs.size());
  std::vector<double> raw(xs.size());
  // Exceptions may not cross the parallel region; capture the first failure.
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      raw[static_cast<std::size_t>(i)] = raw_density(fn, nu, gamma, xs[static_cast<std::size_t>(i)], eta, atom, opts);
    } catch (...) {
#pragma omp critical(hadamard_density_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return finish_density(xs, std::move(raw), atom);
}

GridDensity density_serial(StieltjesFn fn, const AtomicMeasure& nu, double gamma, std::span<const double> xs,
                           double eta, double atom, const SolverOptions& opts) {
  validate_density_inputs(nu, gamma, xs, eta);
  std::vector<double> raw(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) raw[i] = raw_density(fn, nu, gamma, xs[i], eta, atom, opts);
  return finish_density(xs, std::move(raw), atom);
}

Complex mp_fn(const AtomicMeasure& nu, double gamma, HalfPlanePoint z, const SolverOptions& opts) {
  return mp_boxtimes_stieltjes(nu, gamma, z, opts);
}

}  // namespace

GridDensity mp_boxtimes_density(const AtomicMeasure& nu, double gamma, std::span<const double> xs,
                                double eta, const SolverOptions& opts) {
  return density_parallel(mp_fn, nu, gamma, xs, eta, mp_boxtimes_zero_atom(nu, gamma), opts);
}

GridDensity mp_boxtimes_density_serial(const AtomicMeasure& nu, double gamma,
                                       std::span<const double> xs, double eta,
                                       const SolverOptions& opts) {
  return density_serial(mp_fn, nu, gamma, xs, eta, mp_boxtimes_zero_atom(nu, gamma), opts);
}

GridDensity gram_limit_density(const AtomicMeasure& nu, double gamma, std::span<const double> xs, double eta,
                               const SolverOptions& opts) {
  return density_parallel(gram_limit_stieltjes, nu, gamma, xs, eta, gram_limit_zero_atom(nu, gamma), opts);
}

GridDensity gram_limit_density_serial(const AtomicMeasure& nu, double gamma, std::span<const double> xs,
                                      double eta, const SolverOptions& opts) {
  return density_serial(gram_limit_stieltjes, nu, gamma, xs, eta, gram_limit_zero_atom(nu, gamma), opts);
}

double theoretical_cdf(const GridDensity& gd, double x) {
  if (x < gd.xs.front()) return 0.0;
  if (x >= gd.xs.back()) return std::clamp(gd.cdf.back(), 0.0, 1.0);
  const auto it = std::upper_bound(gd.xs.begin(), gd.xs.end(), x);
  const auto hi = static_cast<std::size_t>(it - gd.xs.begin());
  const std::size_t lo = hi - 1;
  const double t = (x - gd.xs[lo]) / (gd.xs[hi] - gd.xs[lo]);
  return std::clamp(gd.cdf[lo] + t * (gd.cdf[hi] - gd.cdf[lo]), 0.0, 1.0);
}

double theoretical_cdf_left(const GridDensity& gd, double x) {
  if (x <= gd.xs.front()) return 0.0;
  return theoretical_cdf(gd, x);
}

double theoretical_quantile(const GridDensity& gd, double p) {
  if (p <= gd.cdf.front()) return gd.xs.front();
  if (p > gd.cdf.back()) return gd.xs.back();
  const auto it = std::lower_bound(gd.cdf.begin(), gd.cdf.end(), p);
  const auto hi = static_cast<std::size_t>(it - gd.cdf.begin());
  const std::size_t lo = hi - 1;
  const double span = gd.cdf[hi] - gd.cdf[lo];
  if (span <= 0.0) return gd.xs[hi];
  return gd.xs[lo] + (p - gd.cdf[lo]) / span * (gd.xs[hi] - gd.xs[lo]);
}

}  // namespace hadamard
