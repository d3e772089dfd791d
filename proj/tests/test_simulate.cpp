#include <cmath>
#include <vector>

#include "doctest.h"
#include "hadamard/errors.hpp"
#include "hadamard/simulate.hpp"
#include "oracles.hpp"

using namespace hadamard;

namespace {

CovarianceMatrix sigma_of(CovarianceKind kind, int d) { return build_sigma(CovarianceSpec{std::move(kind), d}); }

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.k = 2;
  cfg.n = 400;
  cfg.gamma = 1.0;
  cfg.d = {20, 20};
  cfg.specs = {CovarianceSpec{IdentityCov{}, 1}, CovarianceSpec{AtomicCov{{1, 2}, {1, 1}}, 1}};
  cfg.seed = 99;
  cfg.replicas = 2;
  cfg.grid_points = 401;
  return cfg;
}

}  // namespace

TEST_CASE("distributions") {
  CHECK(parse_distribution("gaussian") == RowDistribution::gaussian);
  CHECK(parse_distribution("rademacher") == RowDistribution::rademacher);
  CHECK(parse_distribution("uniform") == RowDistribution::uniform);
  CHECK_THROWS_AS(parse_distribution("cauchy"), InvalidArgument);
  CHECK(fourth_cumulant(RowDistribution::rademacher) == -2.0);
}

TEST_CASE("choose_dimensions") {
  CHECK(choose_dimensions(3042, 2.0, 2) == std::vector<int>{39, 39});
  const auto d = choose_dimensions(3000, 1.0, 2);
  CHECK(d[0] * d[1] == 3000);
  CHECK(std::max(d[0], d[1]) <= 2 * std::min(d[0], d[1]));
  // 1999 is prime: search nearby products within the window
  const auto p = choose_dimensions(1999, 1.0, 2);
  CHECK(std::abs(1999.0 / (p[0] * p[1]) - 1.0) < 0.02);
  CHECK(std::max(p[0], p[1]) <= 2 * std::min(p[0], p[1]));
  const auto three = choose_dimensions(1000, 1.0, 3);
  CHECK(three == std::vector<int>{10, 10, 10});
}

TEST_CASE("config validation") {
  auto cfg = small_config();
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.specs[1].d == 20);
  auto bad = small_config();
  bad.d = {10, 10};
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = small_config();
  bad.n = 7000;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = small_config();
  bad.specs.pop_back();
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = small_config();
  bad.eta = 0.5;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("sample_matrix moments and determinism") {
  const auto id = sigma_of(IdentityCov{}, 4);
  const Eigen::MatrixXd x = sample_matrix(id, 100000, RowDistribution::gaussian, 5);
  const Eigen::MatrixXd cov = x.transpose() * x / 100000.0;
  CHECK((cov - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 0.02);
  CHECK(sample_matrix(id, 50, RowDistribution::gaussian, 5) == x.topRows(50));
  CHECK(sample_matrix(id, 50, RowDistribution::gaussian, 6) != x.topRows(50));

  const auto t = sigma_of(ToeplitzCov{0.9}, 2);
  for (auto dist : {RowDistribution::gaussian, RowDistribution::rademacher, RowDistribution::uniform}) {
    const Eigen::MatrixXd y = sample_matrix(t, 100000, dist, 8);
    const Eigen::MatrixXd c = y.transpose() * y / 100000.0;
    CHECK(std::abs(c(0, 1) - 0.9) < 0.02);
    CHECK(std::abs(c(0, 0) - 1.0) < 0.02);
  }
  const Eigen::MatrixXd r = sample_matrix(id, 10, RowDistribution::rademacher, 1);
  CHECK((r.array().abs() == 1.0).all());
}

TEST_CASE("hadamard_gram hand examples") {
  Eigen::MatrixXd x1(2, 2), x2(2, 2);
  x1 << 1, 0, 0, 1;
  x2 << 1, 1, 1, -1;
  const std::vector<Eigen::MatrixXd> xs{x1, x2};
  Eigen::MatrixXd expect(2, 2);
  expect << 0.5, 0, 0, 0.5;
  CHECK(hadamard_gram(xs) == expect);

  const std::vector<Eigen::MatrixXd> ones{Eigen::MatrixXd::Ones(5, 3), Eigen::MatrixXd::Ones(5, 4)};
  CHECK(hadamard_gram(ones) == Eigen::MatrixXd::Ones(5, 5));

  const Eigen::MatrixXd x = sample_matrix(sigma_of(IdentityCov{}, 7), 9, RowDistribution::gaussian, 2);
  const std::vector<Eigen::MatrixXd> single{x};
  CHECK((hadamard_gram(single) - x * x.transpose() / 7.0).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("hadamard_gram matches the reference and is symmetric") {
  std::vector<Eigen::MatrixXd> xs;
  xs.push_back(sample_matrix(sigma_of(ToeplitzCov{0.5}, 6), 150, RowDistribution::gaussian, 1));
  xs.push_back(sample_matrix(sigma_of(IdentityCov{}, 5), 150, RowDistribution::uniform, 2));
  xs.push_back(sample_matrix(sigma_of(IdentityCov{}, 3), 150, RowDistribution::rademacher, 3));
  const Eigen::MatrixXd ref = hadamard_gram_reference(xs);
  for (int block : {1, 7, 64, 500}) {
    const Eigen::MatrixXd m = hadamard_gram(xs, block);
    CHECK((m - ref).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(m == m.transpose());
  }
  CHECK(hadamard_gram(xs, 7) == hadamard_gram(xs, 64));
  std::vector<Eigen::MatrixXd> mismatched{xs[0], xs[1].topRows(10)};
  CHECK_THROWS_AS(hadamard_gram(mismatched), InvalidArgument);
}

TEST_CASE("esd") {
  Eigen::Matrix3d d = Eigen::Vector3d(1, 2, 3).asDiagonal();
  CHECK(esd(d).eigenvalues == std::vector<double>{1, 2, 3});
  const auto ones = esd(Eigen::MatrixXd::Ones(6, 6)).eigenvalues;
  for (int i = 0; i < 5; ++i) CHECK(std::abs(ones[i]) < 1e-12);
  CHECK(ones[5] == doctest::Approx(6.0));
}

TEST_CASE("rank deficiency and PSD of the Hadamard Gram") {
  const auto id = sigma_of(IdentityCov{}, 20);
  const auto id2 = sigma_of(IdentityCov{}, 25);
  std::vector<Eigen::MatrixXd> xs{sample_matrix(id, 1000, RowDistribution::gaussian, 1),
                                  sample_matrix(id2, 1000, RowDistribution::gaussian, 2)};
  const auto ev = esd(hadamard_gram(xs)).eigenvalues;
  CHECK(ev.front() >= -1e-8);
  int zeros = 0;
  for (double v : ev) zeros += std::abs(v) < 1e-8;
  CHECK(zeros == 500);
}

TEST_CASE("run_experiment is deterministic and consistent") {
  const auto a = run_experiment(small_config());
  const auto b = run_experiment(small_config());
  CHECK(a.eigenvalues == b.eigenvalues);
  CHECK(a.ks == b.ks);
  CHECK(a.eigenvalues.size() == 800);
  CHECK(a.min_eigenvalue >= -1e-8);
  CHECK(a.max_trace_mismatch < 1e-10);
  CHECK(std::abs(a.mean_trace - 1.5) < 5.0 / std::sqrt(400.0));
  CHECK(a.numerical_rank_max <= 400);
  CHECK(a.ks < 0.1);
  CHECK(a.norm_bound == 2.0);
  CHECK(a.hist.total() == 800);

  auto other = small_config();
  other.seed = 100;
  CHECK(run_experiment(other).eigenvalues != a.eigenvalues);
}

TEST_CASE("gaussian and rademacher rows give the same spectrum") {
  auto cfg = small_config();
  cfg.n = 2000;
  cfg.d = {40, 50};
  cfg.replicas = 1;
  const auto g = run_experiment(cfg);
  cfg.dist = RowDistribution::rademacher;
  const auto r = run_experiment(cfg);
  const auto law = law_of(AtomicMeasure::from_covariance_spectrum(snap_kernel(r.eigenvalues)));
  CHECK(ks_distance(snap_kernel(g.eigenvalues), law) < 0.05);
}
