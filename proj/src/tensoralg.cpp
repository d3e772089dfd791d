#include "hadamard/tensoralg.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <random>

#include <fmt/format.h>

#include "hadamard/errors.hpp"
#include "hadamard/rng.hpp"

namespace hadamard {

long tensor_size(std::span<const int> dims) {
  long size = 1;
  for (int d : dims) {
    if (d < 1) throw InvalidArgument(fmt::format("tensor dimension {} must be >= 1", d));
    size *= d;
  }
  return size;
}

long flatten(std::span<const int> u, std::span<const int> dims) {
  if (u.size() != dims.size()) throw InvalidArgument("flatten: index and dims differ in length");
  long idx = 0;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (u[i] < 0 || u[i] >= dims[i])
      throw InvalidArgument(fmt::format("flatten: component {} = {} out of [0, {})", i, u[i], dims[i]));
    idx = idx * dims[i] + u[i];
  }
  return idx;
}

std::vector<int> unflatten(long index, std::span<const int> dims) {
  if (index < 0 || index >= tensor_size(dims)) throw InvalidArgument("unflatten: index out of range");
  std::vector<int> u(dims.size());
  for (std::size_t i = dims.size(); i-- > 0;) {
    u[i] = static_cast<int>(index % dims[i]);
    index /= dims[i];
  }
  return u;
}

namespace {

void check_cap(long size, const char* who) {
  if (size > kTensorSizeCap)
    throw InvalidArgument(fmt::format("{}: |d| = {} exceeds the dense cap {}", who, size, kTensorSizeCap));
}

std::vector<Eigen::MatrixXd> matrices_of(std::span<const CovarianceMatrix> sigmas) {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(sigmas.size());
  for (const auto& s : sigmas) out.push_back(s.matrix());
  return out;
}

Eigen::VectorXd kron_vectors(std::span<const Eigen::VectorXd> xs) {
  Eigen::VectorXd acc = xs.front();
  for (std::size_t i = 1; i < xs.size(); ++i) {
    const auto& x = xs[i];
    Eigen::VectorXd next(acc.size() * x.size());
    for (Eigen::Index a = 0; a < acc.size(); ++a) next.segment(a * x.size(), x.size()) = acc(a) * x;
    acc = std::move(next);
  }
  return acc;
}

}  // namespace

FlattenedTensorOperator braid(std::span<const Eigen::MatrixXd> factors) {
  if (factors.empty()) throw InvalidArgument("braid: need at least one factor");
  std::vector<int> dims;
  for (const auto& f : factors) {
    if (f.rows() != f.cols()) throw InvalidArgument("braid: factors must be square");
    dims.push_back(static_cast<int>(f.rows()));
  }
  const long size = tensor_size(dims);
  check_cap(size, "braid");

  std::vector<std::vector<int>> index(static_cast<std::size_t>(size));
  for (long u = 0; u < size; ++u) index[static_cast<std::size_t>(u)] = unflatten(u, dims);

  FlattenedTensorOperator t{dims, Eigen::MatrixXd(size, size)};
  for (long v = 0; v < size; ++v) {
    const auto& vi = index[static_cast<std::size_t>(v)];
    for (long u = 0; u < size; ++u) {
      const auto& ui = index[static_cast<std::size_t>(u)];
      double entry = 1.0;
      for (std::size_t i = 0; i < factors.size(); ++i) entry *= factors[i](ui[i], vi[i]);
      t.matrix(u, v) = entry;
    }
  }
  return t;
}

FlattenedTensorOperator braid(std::span<const CovarianceMatrix> sigmas) {
  const auto mats = matrices_of(sigmas);
  return braid(std::span<const Eigen::MatrixXd>(mats));
}

std::vector<double> tensor_spectrum_oracle(std::span<const CovarianceMatrix> sigmas) {
  if (sigmas.empty()) throw InvalidArgument("tensor_spectrum_oracle: need at least one factor");
  std::vector<int> dims;
  for (const auto& s : sigmas) dims.push_back(s.dim());
  check_cap(tensor_size(dims), "tensor_spectrum_oracle");

  std::vector<double> acc(sigmas.front().spectrum());
  for (std::size_t i = 1; i < sigmas.size(); ++i) {
    std::vector<double> next;
    next.reserve(acc.size() * sigmas[i].spectrum().size());
    for (double a : acc)
      for (double b : sigmas[i].spectrum()) next.push_back(a * b);
    acc = std::move(next);
  }
  std::sort(acc.begin(), acc.end());
  return acc;
}

Eigen::MatrixXd tensor_columns(std::span<const Eigen::MatrixXd> xs) {
  if (xs.empty()) throw InvalidArgument("tensor_columns: no factor matrices");
  std::vector<int> dims;
  for (const auto& x : xs) {
    if (x.rows() != xs.front().rows()) throw InvalidArgument("tensor_columns: row counts differ");
    dims.push_back(static_cast<int>(x.cols()));
  }
  const long size = tensor_size(dims);
  check_cap(size, "tensor_columns");
  const Eigen::Index n = xs.front().rows();
  if (n > 64) throw InvalidArgument(fmt::format("tensor_columns: n = {} exceeds the small-instance cap 64", n));

  Eigen::MatrixXd a(size, n);
  std::vector<Eigen::VectorXd> rows(xs.size());
  for (Eigen::Index p = 0; p < n; ++p) {
    for (std::size_t i = 0; i < xs.size(); ++i) rows[i] = xs[i].row(p).transpose();
    a.col(p) = kron_vectors(rows);
  }
  return a;
}

double tensor_columns_check(std::span<const Eigen::MatrixXd> xs) {
  const Eigen::MatrixXd a = tensor_columns(xs);
  const Eigen::MatrixXd via_tensor = (a.transpose() * a) / static_cast<double>(a.rows());
  return (via_tensor - hadamard_gram(xs)).cwiseAbs().maxCoeff();
}

TestOperatorKind parse_test_operator(const std::string& name) {
  if (name == "identity") return TestOperatorKind::identity;
  if (name == "braid-of-random-PSD" || name == "braid_random_psd") return TestOperatorKind::braid_random_psd;
  if (name == "random-symmetric-normalized" || name == "random_symmetric") return TestOperatorKind::random_symmetric;
  throw InvalidArgument(fmt::format(
      "unknown test operator '{}' (identity|braid-of-random-PSD|random-symmetric-normalized)", name));
}

std::string to_string(TestOperatorKind kind) {
  switch (kind) {
    case TestOperatorKind::identity: return "identity";
    case TestOperatorKind::braid_random_psd: return "braid-of-random-PSD";
    case TestOperatorKind::random_symmetric: return "random-symmetric-normalized";
  }
  throw InvalidArgument("invalid test operator kind");
}

Eigen::MatrixXd TestOperator::to_dense() const {
  const long size = tensor_size(dims);
  check_cap(size, "TestOperator::to_dense");
  switch (kind) {
    case TestOperatorKind::identity: return Eigen::MatrixXd::Identity(size, size);
    case TestOperatorKind::braid_random_psd: return braid(std::span<const Eigen::MatrixXd>(factors)).matrix;
    case TestOperatorKind::random_symmetric: return dense;
  }
  throw InvalidArgument("invalid test operator kind");
}

TestOperator make_test_operator(TestOperatorKind kind, std::span<const int> dims, std::uint64_t seed) {
  TestOperator b;
  b.kind = kind;
  b.dims.assign(dims.begin(), dims.end());
  const long size = tensor_size(dims);
  check_cap(size, "make_test_operator");
  std::normal_distribution<double> normal;
  switch (kind) {
    case TestOperatorKind::identity: break;
    case TestOperatorKind::braid_random_psd: {
      // ||braid(B_i)|| = prod ||B_i||, so unit-norm factors give a unit-norm B.
      for (std::size_t i = 0; i < dims.size(); ++i) {
        Engine engine = make_engine(seed, {stream::kTestOperator, i});
        Eigen::MatrixXd g(dims[i], dims[i]);
        for (Eigen::Index c = 0; c < g.cols(); ++c)
          for (Eigen::Index r = 0; r < g.rows(); ++r) g(r, c) = normal(engine);
        Eigen::MatrixXd psd = g * g.transpose();
        psd = 0.5 * (psd + psd.transpose());
        psd /= Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(psd, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
        b.factors.push_back(std::move(psd));
      }
      break;
    }
    case TestOperatorKind::random_symmetric: {
      Engine engine = make_engine(seed, {stream::kTestOperator});
      Eigen::MatrixXd g(size, size);
      for (Eigen::Index c = 0; c < size; ++c)
        for (Eigen::Index r = 0; r < size; ++r) g(r, c) = normal(engine);
      Eigen::MatrixXd sym = 0.5 * (g + g.transpose());
      sym /= Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sym, Eigen::EigenvaluesOnly)
                 .eigenvalues()
                 .cwiseAbs()
                 .maxCoeff();
      b.dense = std::move(sym);
      break;
    }
  }
  return b;
}

double quadratic_form(const TestOperator& b, std::span<const Eigen::VectorXd> xs) {
  if (xs.size() != b.dims.size()) throw InvalidArgument("quadratic_form: factor count mismatch");
  switch (b.kind) {
    case TestOperatorKind::identity: {
      double v = 1.0;
      for (const auto& x : xs) v *= x.squaredNorm();
      return v;
    }
    case TestOperatorKind::braid_random_psd: {
      double v = 1.0;
      for (std::size_t i = 0; i < xs.size(); ++i) v *= xs[i].dot(b.factors[i] * xs[i]);
      return v;
    }
    case TestOperatorKind::random_symmetric: {
      const Eigen::VectorXd a = kron_vectors(xs);
      return a.dot(b.dense * a);
    }
  }
  throw InvalidArgument("invalid test operator kind");
}

double trace_against(const TestOperator& b, std::span<const CovarianceMatrix> sigmas) {
  if (sigmas.size() != b.dims.size()) throw InvalidArgument("trace_against: factor count mismatch");
  switch (b.kind) {
    case TestOperatorKind::identity: {
      double v = 1.0;
      for (const auto& s : sigmas) v *= s.matrix().trace();
      return v;
    }
    case TestOperatorKind::braid_random_psd: {
      double v = 1.0;
      for (std::size_t i = 0; i < sigmas.size(); ++i) v *= (b.factors[i] * sigmas[i].matrix()).trace();
      return v;
    }
    case TestOperatorKind::random_symmetric: {
      const auto t = braid(sigmas);
      return (b.dense.array() * t.matrix.transpose().array()).sum();
    }
  }
  throw InvalidArgument("invalid test operator kind");
}

namespace {

struct TrialSetup {
  TestOperator b;
  double trace = 0.0;
};

TrialSetup setup_trials(std::span<const CovarianceMatrix> sigmas, TestOperatorKind kind, int n, int trials,
                        std::uint64_t seed) {
  if (sigmas.empty()) throw InvalidArgument("quadratic_form_concentration: need at least one factor");
  if (trials < 100) throw InvalidArgument(fmt::format("quadratic_form_concentration: trials = {} < 100", trials));
  if (n < 1) throw InvalidArgument("quadratic_form_concentration: n must be >= 1");
  std::vector<int> dims;
  for (const auto& s : sigmas) dims.push_back(s.dim());
  check_cap(tensor_size(dims), "quadratic_form_concentration");
  TrialSetup setup{make_test_operator(kind, dims, seed), 0.0};
  setup.trace = trace_against(setup.b, sigmas);
  return setup;
}

double trial_square(const TrialSetup& setup, std::span<const CovarianceMatrix> sigmas, RowDistribution dist,
                    std::uint64_t seed, int t) {
  std::vector<Eigen::VectorXd> xs;
  xs.reserve(sigmas.size());
  for (std::size_t i = 0; i < sigmas.size(); ++i) {
    const auto stream_seed = derive_seed(seed, {stream::kConcentration, static_cast<std::uint64_t>(t), i});
    xs.push_back(sample_matrix(sigmas[i], 1, dist, stream_seed).row(0).transpose());
  }
  const double dev = quadratic_form(setup.b, xs) - setup.trace;
  return dev * dev;
}

ConcentrationEstimate reduce(std::span<const double> squares, int n) {
  const auto t = static_cast<double>(squares.size());
  double mean = 0.0;
  for (double q : squares) mean += q;
  mean /= t;
  double var = 0.0;
  for (double q : squares) var += (q - mean) * (q - mean);
  var /= (t - 1.0);
  const double n2 = static_cast<double>(n) * static_cast<double>(n);
  return {mean / n2, std::sqrt(var / t) / n2};
}

}  // namespace

ConcentrationEstimate quadratic_form_concentration(std::span<const CovarianceMatrix> sigmas,
                                                   RowDistribution dist, TestOperatorKind kind, int n,
                                                   int trials, std::uint64_t seed) {
  const TrialSetup setup = setup_trials(sigmas, kind, n, trials, seed);
  std::vector<double> squares(static_cast<std::size_t>(trials));
  std::exception_ptr failure;
#pragma omp parallel for schedule(static)
  for (int t = 0; t < trials; ++t) {
    try {
      squares[static_cast<std::size_t>(t)] = trial_square(setup, sigmas, dist, seed, t);
    } catch (...) {
#pragma omp critical(hadamard_trial_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return reduce(squares, n);
}

ConcentrationEstimate quadratic_form_concentration_serial(std::span<const CovarianceMatrix> sigmas,
                                                          RowDistribution dist, TestOperatorKind kind,
                                                          int n, int trials, std::uint64_t seed) {
  const TrialSetup setup = setup_trials(sigmas, kind, n, trials, seed);
  std::vector<double> squares(static_cast<std::size_t>(trials));
  for (int t = 0; t < trials; ++t) squares[static_cast<std::size_t>(t)] = trial_square(setup, sigmas, dist, seed, t);
  return reduce(squares, n);
}

std::vector<ConcentrationRow> run_concentration_sweep(const ConcentrationSweep& sweep) {
  if (sweep.k < 1) throw InvalidArgument("concentration sweep: k must be >= 1");
  if (sweep.d_mins.empty()) throw InvalidArgument("concentration sweep: empty d_min list");
  if (static_cast<int>(sweep.specs.size()) != sweep.k)
    throw InvalidArgument(fmt::format("concentration sweep: {} specs for k = {}", sweep.specs.size(), sweep.k));
  if (!(sweep.gamma > 0.0)) throw InvalidArgument("concentration sweep: gamma must be positive");

  std::vector<ConcentrationRow> rows;
  for (std::size_t j = 0; j < sweep.d_mins.size(); ++j) {
    const int dmin = sweep.d_mins[j];
    if (dmin < 2) throw InvalidArgument("concentration sweep: d_min must be >= 2");
    std::vector<CovarianceMatrix> sigmas;
    for (auto spec : sweep.specs) {
      spec.d = dmin;
      sigmas.push_back(build_sigma(spec));
    }
    const int n = static_cast<int>(std::lround(sweep.gamma * std::pow(static_cast<double>(dmin), sweep.k)));
    const auto est = quadratic_form_concentration(sigmas, sweep.dist, sweep.b_choice, n, sweep.trials,
                                                  derive_seed(sweep.seed, {j}));
    rows.push_back({sweep.k, dmin, n, sweep.trials, est.estimate, est.std_error});
  }
  return rows;
}

std::string to_csv(std::span<const ConcentrationRow> rows) {
  std::string out = "k,d_min,n,trials,estimate,stderr\n";
  for (const auto& r : rows)
    out += fmt::format("{},{},{},{},{:.17g},{:.17g}\n", r.k, r.d_min, r.n, r.trials, r.estimate, r.std_error);
  return out;
}

}  // namespace hadamard
