#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "hadamard/errors.hpp"
#include "hadamard/stieltjes.hpp"
#include "oracles.hpp"

using namespace hadamard;

namespace {

std::vector<HalfPlanePoint> z_grid(double gamma) {
  // 20 real parts across and beyond the support, 10 log-spaced heights in [1e-4, 1].
  const double b = (1 + std::sqrt(gamma)) * (1 + std::sqrt(gamma));
  std::vector<HalfPlanePoint> zs;
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 10; ++j) zs.emplace_back(-0.5 + (b + 1.0) * i / 19.0, std::pow(10.0, -4.0 + 4.0 * j / 9.0));
  return zs;
}

}  // namespace

TEST_CASE("half-plane point validates") {
  CHECK_THROWS_AS(HalfPlanePoint(1.0, 0.0), InvalidArgument);
  CHECK_THROWS_AS(HalfPlanePoint(1.0, -1.0), InvalidArgument);
  CHECK_THROWS_AS(HalfPlanePoint(NAN, 1.0), InvalidArgument);
}

TEST_CASE("stieltjes transform of an atomic measure") {
  const auto m = AtomicMeasure::atomic(std::vector<double>{1, 3}, std::vector<double>{0.5, 0.5});
  const HalfPlanePoint z(2.0, 0.5);
  const Complex expect = 0.5 / (1.0 - z.z()) + 0.5 / (3.0 - z.z());
  CHECK(std::abs(stieltjes_transform(m, z) - expect) < 1e-15);
  const double r = 1e4 * m.max_atom();
  CHECK(std::abs(Complex(0, r) * stieltjes_transform(m, HalfPlanePoint(0, r)) + 1.0) < 1e-4);
}

TEST_CASE("MP map for delta_1 matches the quadratic root") {
  const auto one = AtomicMeasure::dirac(1.0);
  for (double gamma : {0.25, 0.5, 1.0, 2.0, 4.0}) {
    CAPTURE(gamma);
    double worst = 0;
    for (const auto& z : z_grid(gamma)) {
      const auto res = mp_boxtimes_solve(one, gamma, z);
      worst = std::max(worst, std::abs(res.s - oracle::mp_quadratic_root(gamma, z.z())));
      CHECK(res.s.imag() > 0);
      CHECK(std::abs(res.s - mp_boxtimes_rhs(one, gamma, z.z(), res.s)) <= 1e-12 * std::max(1.0, std::abs(res.s)));
    }
    CHECK(worst < 1e-8);
  }
}

TEST_CASE("MP map golden-ratio value") {
  const Complex s = mp_boxtimes_stieltjes(AtomicMeasure::dirac(1.0), 1.0, HalfPlanePoint(-1.0, 1e-8));
  CHECK(std::abs(s - (std::sqrt(5.0) - 1.0) / 2.0) < 1e-7);
}

TEST_CASE("MP map agrees with quadrature of the closed-form density") {
  for (double gamma : {0.5, 2.0}) {
    for (const auto& z : {HalfPlanePoint(1.0, 0.3), HalfPlanePoint(-0.5, 0.1), HalfPlanePoint(3.0, 1.0)}) {
      const Complex s = mp_boxtimes_stieltjes(AtomicMeasure::dirac(1.0), gamma, z);
      CHECK(std::abs(s - oracle::mp_stieltjes_quadrature(gamma, z.z())) < 1e-6);
    }
  }
}

TEST_CASE("MP map scaling identity for delta_c") {
  for (double c : {0.5, 3.0}) {
    for (double gamma : {0.5, 2.0}) {
      const HalfPlanePoint z(1.3, 0.2);
      const Complex lhs = mp_boxtimes_stieltjes(AtomicMeasure::dirac(c), gamma, z);
      const Complex rhs = mp_boxtimes_stieltjes(AtomicMeasure::dirac(1.0), gamma, HalfPlanePoint(1.3 / c, 0.2 / c)) / c;
      CHECK(std::abs(lhs - rhs) < 1e-8);
    }
  }
}

TEST_CASE("MP map on a multi-atom law is Herglotz and satisfies the equation") {
  const auto nu = AtomicMeasure::atomic(std::vector<double>{0.0, 1.0, 2.0, 6.0},
                                        std::vector<double>{0.2, 0.3, 0.3, 0.2});
  for (double gamma : {0.25, 1.0, 3.0}) {
    for (double x : {0.0, 0.01, 0.5, 2.0, 7.0, 30.0}) {
      for (double eta : {1e-4, 1e-2, 1.0}) {
        const auto res = mp_boxtimes_solve(nu, gamma, HalfPlanePoint(x, eta));
        CHECK(res.s.imag() > 0);
        CHECK(res.residual <= 1e-12 * std::max(1.0, std::abs(res.s)));
      }
    }
  }
  CHECK_THROWS_AS(mp_boxtimes_solve(nu, 0.0, HalfPlanePoint(1, 1)), InvalidArgument);
}

TEST_CASE("zero atoms") {
  const auto one = AtomicMeasure::dirac(1.0);
  CHECK(mp_boxtimes_zero_atom(one, 4.0) == 0.75);
  CHECK(gram_limit_zero_atom(one, 4.0) == 0.75);
  CHECK(mp_boxtimes_zero_atom(one, 0.5) == 0.0);
  CHECK(mp_zero_atom(4.0) == 0.75);
  const auto half_zero = AtomicMeasure::atomic(std::vector<double>{0.0, 1.0}, std::vector<double>{0.5, 0.5});
  CHECK(mp_boxtimes_zero_atom(half_zero, 0.5) == 0.5);
  CHECK(gram_limit_zero_atom(half_zero, 0.5) == 0.0);
  CHECK(gram_limit_zero_atom(half_zero, 4.0) == doctest::Approx(0.875));
}

TEST_CASE("closed-form MP density") {
  const auto e = mp_edges(1.0);
  CHECK(e.lower == 0.0);
  CHECK(e.upper == 4.0);
  CHECK(mp_closed_form_density(1.0, 2.0) == doctest::Approx(1.0 / (2 * std::numbers::pi)).epsilon(1e-12));
  CHECK(mp_closed_form_density(1.0, 5.0) == 0.0);
  CHECK(mp_closed_form_density(1.0, -1.0) == 0.0);
}

TEST_CASE("inverted density matches the closed form") {
  const auto one = AtomicMeasure::dirac(1.0);
  for (double gamma : {0.25, 0.5, 1.0, 2.0, 4.0}) {
    CAPTURE(gamma);
    const auto gd = mp_boxtimes_density(one, gamma, default_grid(one, gamma), 1e-4);
    const auto [a, b] = mp_edges(gamma);
    double worst = 0;
    for (std::size_t i = 0; i < gd.xs.size(); ++i) {
      const double x = gd.xs[i];
      if (x < a + 0.05 || x > b - 0.05) continue;
      worst = std::max(worst, std::abs(gd.pdf[i] - oracle::mp_density(gamma, x)));
    }
    CHECK(worst < 5e-3);
    CHECK(gd.zero_atom == mp_zero_atom(gamma));
    CHECK(gd.max_clipped <= 1e-6);
    const double mass = gd.zero_atom + gd.continuous_mass();
    CHECK(mass > 0.995);
    CHECK(mass < 1.005);
    for (std::size_t i = 1; i < gd.cdf.size(); ++i) CHECK(gd.cdf[i] >= gd.cdf[i - 1]);
  }
  const auto gd1 = mp_boxtimes_density(one, 1.0, default_grid(one, 1.0), 1e-4);
  // x = 2 lies on the grid for gamma = 1 only approximately; interpolate.
  const auto it = std::lower_bound(gd1.xs.begin(), gd1.xs.end(), 2.0);
  CHECK(std::abs(gd1.pdf[static_cast<std::size_t>(it - gd1.xs.begin())] - 1 / (2 * std::numbers::pi)) < 2e-3);
}

TEST_CASE("density serial and parallel agree bitwise") {
  const auto nu = AtomicMeasure::atomic(std::vector<double>{1, 2, 3}, std::vector<double>{1. / 3, 1. / 3, 1. / 3});
  const auto xs = default_grid(nu, 2.0, 301);
  const auto p = gram_limit_density(nu, 2.0, xs, 1e-4);
  const auto s = gram_limit_density_serial(nu, 2.0, xs, 1e-4);
  CHECK(p.pdf == s.pdf);
  CHECK(p.cdf == s.cdf);
  const auto p2 = mp_boxtimes_density(nu, 0.5, xs, 1e-4);
  const auto s2 = mp_boxtimes_density_serial(nu, 0.5, xs, 1e-4);
  CHECK(p2.pdf == s2.pdf);
}

TEST_CASE("gram limit equals the MP map for delta_1 and keeps total mass") {
  const auto one = AtomicMeasure::dirac(1.0);
  for (double gamma : {0.25, 2.0}) {
    const HalfPlanePoint z(0.7, 0.05);
    CHECK(std::abs(gram_limit_stieltjes(one, gamma, z) - mp_boxtimes_stieltjes(one, gamma, z)) < 1e-9);
  }
  const auto nu = AtomicMeasure::atomic(std::vector<double>{1, 2, 3, 4, 6},
                                        std::vector<double>{1. / 6, 2. / 6, 1. / 6, 1. / 6, 1. / 6});
  for (double gamma : {0.25, 3.0}) {
    const auto gd = gram_limit_density(nu, gamma, default_grid(nu, gamma), 1e-4);
    const double mass = gd.zero_atom + gd.continuous_mass();
    CHECK(mass > 0.995);
    CHECK(mass < 1.005);
  }
}

TEST_CASE("gram limit moments") {
  // The first two moments of the Gram limit are E[t] and E[t]^2 + gamma E[t^2].
  const auto nu = AtomicMeasure::atomic(std::vector<double>{1, 2, 3}, std::vector<double>{0.2, 0.5, 0.3});
  const double m1 = moment(nu, 1), m2 = moment(nu, 2);
  for (double gamma : {0.25, 2.0}) {
    const auto gd = gram_limit_density(nu, gamma, default_grid(nu, gamma, 8001), 1e-4);
    double e1 = 0, e2 = 0;
    for (std::size_t i = 1; i < gd.xs.size(); ++i) {
      const double h = gd.xs[i] - gd.xs[i - 1];
      e1 += 0.5 * h * (gd.pdf[i] * gd.xs[i] + gd.pdf[i - 1] * gd.xs[i - 1]);
      e2 += 0.5 * h * (gd.pdf[i] * gd.xs[i] * gd.xs[i] + gd.pdf[i - 1] * gd.xs[i - 1] * gd.xs[i - 1]);
    }
    CHECK(e1 == doctest::Approx(m1).epsilon(5e-3));
    CHECK(e2 == doctest::Approx(m1 * m1 + gamma * m2).epsilon(5e-3));
  }
}

TEST_CASE("hard edge at zero keeps the cdf honest on coarse grids") {
  const auto one = AtomicMeasure::dirac(1.0);
  for (int points : {201, 401, 2001}) {
    const auto gd = mp_boxtimes_density(one, 1.0, default_grid(one, 1.0, points), 1e-4);
    // closed-form MP_1 cdf at x = 1: 1/3 + sqrt(3)/(2 pi)
    const double exact = 1.0 / 3.0 + std::sqrt(3.0) / (2.0 * std::numbers::pi);
    CHECK(std::abs(theoretical_cdf(gd, 1.0) - exact) < 5e-3);
  }
}

TEST_CASE("density input validation") {
  const auto one = AtomicMeasure::dirac(1.0);
  const auto xs = default_grid(one, 1.0, 101);
  CHECK_THROWS_AS(mp_boxtimes_density(one, 1.0, xs, 1e-7), InvalidArgument);
  CHECK_THROWS_AS(mp_boxtimes_density(one, 1.0, xs, 0.1), InvalidArgument);
  const std::vector<double> short_grid{0.0, 0.5, 1.0};
  CHECK_THROWS_AS(mp_boxtimes_density(one, 1.0, short_grid, 1e-4), InvalidArgument);
  const std::vector<double> bad{0.0, 1.0, 1.0, 5.0};
  CHECK_THROWS_AS(mp_boxtimes_density(one, 1.0, bad, 1e-4), InvalidArgument);
}

TEST_CASE("theoretical cdf and quantile") {
  const auto one = AtomicMeasure::dirac(1.0);
  const auto gd = mp_boxtimes_density(one, 4.0, default_grid(one, 4.0), 1e-4);
  CHECK(theoretical_cdf(gd, -1.0) == 0.0);
  CHECK(theoretical_cdf(gd, 0.0) == 0.75);
  CHECK(theoretical_cdf_left(gd, 0.0) == 0.0);
  CHECK(std::abs(theoretical_cdf(gd, 100.0) - 1.0) < 5e-3);
  CHECK(theoretical_quantile(gd, 0.5) == 0.0);
  const double q = theoretical_quantile(gd, 0.9);
  CHECK(theoretical_cdf(gd, q) == doctest::Approx(0.9).epsilon(1e-9));
}
