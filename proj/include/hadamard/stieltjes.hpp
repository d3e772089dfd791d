#pragma once

#include <complex>
#include <span>
#include <vector>

#include "hadamard/measure.hpp"

namespace hadamard {

using Complex = std::complex<double>;

/// Spectral argument z with Im z > 0.
class HalfPlanePoint {
 public:
  HalfPlanePoint(double re, double im);

  double re() const noexcept { return re_; }
  double im() const noexcept { return im_; }
  Complex z() const noexcept { return {re_, im_}; }

 private:
  double re_;
  double im_;
};

struct SolverOptions {
  double tol = 1e-12;   // on the step and on |s - F(s)|, relative to max(1, |s|)
  int max_iter = 2000;  // per continuation level, for the damped fixed point
};

struct SolverResult {
  Complex s;
  double residual = 0.0;  // |s - F(s)|
  int iterations = 0;     // total over all continuation levels
};

/// Sum of w / (a - z) over the atoms of m.
Complex stieltjes_transform(const AtomicMeasure& m, HalfPlanePoint z);

/// Right-hand side F(s) of the self-consistent equation
///   s = sum_t w_t / (t (1 - gamma (1 + z s)) - z)
/// satisfied by the Stieltjes transform of the MP map of nu.
Complex mp_boxtimes_rhs(const AtomicMeasure& nu, double gamma, Complex z, Complex s);

/// Stieltjes transform of mu_MP^gamma boxtimes nu at z.
///
/// The root is followed down from high in the half plane, where the
/// fixed-point map contracts, to Im z along a geometric ladder of imaginary
/// parts. Each level is polished by Newton; a level where Newton leaves the
/// Herglotz branch falls back to the damped iteration
/// s <- (1 - a) s + a F(s), halving a after any residual increase, and a
/// second failure restarts from i / Im z with a = 0.1.
/// Throws SolverError carrying the last residual when all of that fails.
SolverResult mp_boxtimes_solve(const AtomicMeasure& nu, double gamma, HalfPlanePoint z,
                               const SolverOptions& opts = {});

Complex mp_boxtimes_stieltjes(const AtomicMeasure& nu, double gamma, HalfPlanePoint z,
                              const SolverOptions& opts = {});

/// Mass of mu_MP^gamma boxtimes nu at 0: max(nu({0}), 1 - 1/gamma).
double mp_boxtimes_zero_atom(const AtomicMeasure& nu, double gamma);

/// Stieltjes transform of the limiting law of the n x n Gram matrix
/// (1/D) Y^T T Y, Y standard D x n, n/D -> gamma, limspec(T) = nu.
///
/// Its nonzero spectrum is gamma times that of a D x D sample covariance with
/// ratio 1/gamma, so m(z) = s(z/gamma)/gamma^2 + (1/gamma - 1)/z with
/// s = mp_boxtimes_stieltjes(nu, 1/gamma, .). Equals mp_boxtimes_stieltjes
/// when nu = delta_1.
Complex gram_limit_stieltjes(const AtomicMeasure& nu, double gamma, HalfPlanePoint z,
                             const SolverOptions& opts = {});

/// Mass of the Gram limit at 0: max(0, 1 - (1 - nu({0})) / gamma).
double gram_limit_zero_atom(const AtomicMeasure& nu, double gamma);

struct MpEdges {
  double lower;
  double upper;
};
MpEdges mp_edges(double gamma);

/// Marchenko-Pastur density sqrt((b - x)(x - a)) / (2 pi gamma x) on [a, b].
/// The atom at 0 for gamma > 1 is reported by mp_zero_atom, not here.
double mp_closed_form_density(double gamma, double x);
double mp_zero_atom(double gamma);

/// Sampled continuous law plus an atom at 0.
///
/// `cdf[i]` is the full CDF at xs[i], atom included (the grid starts at 0).
struct GridDensity {
  std::vector<double> xs;
  std::vector<double> pdf;
  std::vector<double> cdf;
  double zero_atom = 0.0;
  double max_clipped = 0.0;  // largest negative inversion value clipped to 0

  double continuous_mass() const;  // trapezoid integral of pdf
};

/// Uniform grid on [0, 1.1 (1 + sqrt(gamma))^2 max(nu)].
std::vector<double> default_grid(const AtomicMeasure& nu, double gamma, int points = 2001);

/// Density of mu_MP^gamma boxtimes nu by Stieltjes inversion at height eta.
/// The Lorentzian of the zero atom is subtracted before clipping. Grid points
/// are evaluated in parallel; output does not depend on the thread count.
GridDensity mp_boxtimes_density(const AtomicMeasure& nu, double gamma, std::span<const double> xs,
                                double eta, const SolverOptions& opts = {});

/// Single-threaded reference for mp_boxtimes_density.
GridDensity mp_boxtimes_density_serial(const AtomicMeasure& nu, double gamma,
                                       std::span<const double> xs, double eta,
                                       const SolverOptions& opts = {});

/// Density of the Gram limit, same inversion and grid rules as
/// mp_boxtimes_density.
GridDensity gram_limit_density(const AtomicMeasure& nu, double gamma, std::span<const double> xs, double eta,
                               const SolverOptions& opts = {});
GridDensity gram_limit_density_serial(const AtomicMeasure& nu, double gamma, std::span<const double> xs,
                                      double eta, const SolverOptions& opts = {});

/// CDF of a GridDensity: 0 below the grid, linear interpolation on it, clamped.
double theoretical_cdf(const GridDensity& gd, double x);
/// Left limit of theoretical_cdf (differs only at the zero atom).
double theoretical_cdf_left(const GridDensity& gd, double x);
/// Generalized inverse of theoretical_cdf.
double theoretical_quantile(const GridDensity& gd, double p);

}  // namespace hadamard
