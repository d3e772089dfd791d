// Parallel kernels against their serial references.
#include <vector>

#include <benchmark/benchmark.h>

#include "hadamard/simulate.hpp"
#include "hadamard/stieltjes.hpp"
#include "hadamard/tensoralg.hpp"

using namespace hadamard;

namespace {

std::vector<Eigen::MatrixXd> factors(int n, int d) {
  std::vector<Eigen::MatrixXd> xs;
  for (int i = 0; i < 2; ++i) {
    const auto sigma = build_sigma(CovarianceSpec{IdentityCov{}, d});
    xs.push_back(sample_matrix(sigma, n, RowDistribution::gaussian, 100 + i));
  }
  return xs;
}

void BM_gram(benchmark::State& state) {
  const auto xs = factors(static_cast<int>(state.range(0)), 32);
  for (auto _ : state) benchmark::DoNotOptimize(hadamard_gram(xs));
}

void BM_gram_reference(benchmark::State& state) {
  const auto xs = factors(static_cast<int>(state.range(0)), 32);
  for (auto _ : state) benchmark::DoNotOptimize(hadamard_gram_reference(xs));
}

const AtomicMeasure& fig1_nu() {
  static const std::vector<double> values{1.0, 2.0, 3.0};
  static const std::vector<double> weights(3, 1.0 / 3);
  static const AtomicMeasure nu = AtomicMeasure::atomic(values, weights);
  return nu;
}

void BM_density(benchmark::State& state) {
  const auto xs = default_grid(fig1_nu(), 2.0, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(gram_limit_density(fig1_nu(), 2.0, xs, 1e-4));
}

void BM_density_serial(benchmark::State& state) {
  const auto xs = default_grid(fig1_nu(), 2.0, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(gram_limit_density_serial(fig1_nu(), 2.0, xs, 1e-4));
}

std::vector<CovarianceMatrix> identity_pair(int d) {
  return {build_sigma(CovarianceSpec{IdentityCov{}, d}), build_sigma(CovarianceSpec{IdentityCov{}, d})};
}

void BM_concentration(benchmark::State& state) {
  const auto sigmas = identity_pair(32);
  for (auto _ : state)
    benchmark::DoNotOptimize(quadratic_form_concentration(sigmas, RowDistribution::gaussian, TestOperatorKind::identity,
                                                          1024, static_cast<int>(state.range(0)), 7));
}

void BM_concentration_serial(benchmark::State& state) {
  const auto sigmas = identity_pair(32);
  for (auto _ : state)
    benchmark::DoNotOptimize(quadratic_form_concentration_serial(
        sigmas, RowDistribution::gaussian, TestOperatorKind::identity, 1024, static_cast<int>(state.range(0)), 7));
}

}  // namespace

BENCHMARK(BM_gram)->Arg(500)->Arg(1500)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_gram_reference)->Arg(500)->Arg(1500)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_density)->Arg(501)->Arg(2001)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_density_serial)->Arg(501)->Arg(2001)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_concentration)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_concentration_serial)->Arg(2000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
