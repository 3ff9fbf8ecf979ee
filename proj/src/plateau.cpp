#include "fastslow/plateau.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fastslow/bas.hpp"
#include "fastslow/cost.hpp"
#include "fastslow/error.hpp"
#include "fastslow/qsim.hpp"

namespace fastslow::plateau {

Matrix haar_random_unitary(int d, Rng& rng) {
  if (d < 1 || d > kMaxHaarDim) {
    throw SizeError("haar_random_unitary: dimension must be in [1, 64], got " + std::to_string(d));
  }
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  Matrix G(d, d);
  for (int j = 0; j < d; ++j) {
    for (int i = 0; i < d; ++i) G(i, j) = Complex(normal(rng), normal(rng));
  }
  Eigen::HouseholderQR<Matrix> qr(G);
  Matrix Q = qr.householderQ();
  const Matrix& R = qr.matrixQR();
  for (int j = 0; j < d; ++j) {
    const Complex r = R(j, j);
    const double mag = std::abs(r);
    Q.col(j) *= mag > 0.0 ? r / mag : Complex(1.0, 0.0);
  }
  return Q;
}

Matrix haar_random_unitary(int d, Seed seed) {
  Rng rng(seed);
  return haar_random_unitary(d, rng);
}

Complex first_moment_rhs(const Matrix& X, const Matrix& Y) {
  return X.trace() * Y.trace() / static_cast<double>(X.rows());
}

Complex second_moment_rhs(const Matrix& X, const Matrix& Y, const Matrix& Z, const Matrix& W) {
  const double d = static_cast<double>(X.rows());
  const Complex tx = X.trace(), ty = Y.trace(), tz = Z.trace(), tw = W.trace();
  const Complex txz = (X * Z).trace(), tyw = (Y * W).trace();
  return (tx * ty * tz * tw + txz * tyw) / (d * d - 1.0) -
         (txz * ty * tw + tx * tz * tyw) / (d * d * d - d);
}

Complex interleaved_moment_rhs(const Matrix& X, const Matrix& Y, const Matrix& Z, const Matrix& W) {
  const double d = static_cast<double>(X.rows());
  const Complex tx = X.trace(), ty = Y.trace(), tz = Z.trace(), tw = W.trace();
  const Complex txz = (X * Z).trace(), tyw = (Y * W).trace();
  return (tx * tz * tyw + txz * ty * tw) / (d * d - 1.0) -
         (txz * tyw + tx * ty * tz * tw) / (d * (d * d - 1.0));
}

namespace {

struct Moments {
  double count = 0.0;
  Complex mean{0.0, 0.0};
  double m2 = 0.0;  // sum |x - mean|^2

  void add(Complex x) {
    count += 1.0;
    const Complex delta = x - mean;
    mean += delta / count;
    m2 += std::real(std::conj(delta) * (x - mean));
  }

  void merge(const Moments& o) {
    if (o.count == 0.0) return;
    if (count == 0.0) {
      *this = o;
      return;
    }
    const double total = count + o.count;
    const Complex delta = o.mean - mean;
    mean += delta * (o.count / total);
    m2 += o.m2 + std::norm(delta) * count * o.count / total;
    count = total;
  }
};

using Integrand = std::function<Complex(const Matrix&)>;

HaarCheckResult monte_carlo(int d, std::size_t n_samples, Seed seed, Exec exec,
                            const Integrand& integrand, Complex analytic) {
  if (n_samples < 1) throw ArgumentError("haar check: n_samples must be >= 1");
  std::vector<Moments> parts(kMcBatches);
  for_each_index(exec, kMcBatches, [&](std::size_t b) {
    const std::size_t lo = n_samples * b / kMcBatches;
    const std::size_t hi = n_samples * (b + 1) / kMcBatches;
    Rng rng(derive_seed(seed, {b}));
    Moments m;
    for (std::size_t s = lo; s < hi; ++s) m.add(integrand(haar_random_unitary(d, rng)));
    parts[b] = m;
  });
  Moments total;
  for (const auto& p : parts) total.merge(p);

  HaarCheckResult r;
  r.dimension = d;
  r.n_samples = n_samples;
  r.mc_estimate = total.mean;
  r.analytic_value = analytic;
  const double var = n_samples >= 2 ? std::max(total.m2, 0.0) / static_cast<double>(n_samples - 1) : 0.0;
  r.mc_std_error = std::sqrt(var / static_cast<double>(n_samples));
  const double diff = std::abs(r.mc_estimate - analytic);
  const double scale = std::max(1.0, std::abs(analytic));
  if (r.mc_std_error <= 1e-12 * scale) {
    r.zero_variance = true;
    r.z_score = diff <= 1e-9 * scale ? 0.0 : std::numeric_limits<double>::infinity();
  } else {
    r.z_score = diff / r.mc_std_error;
  }
  return r;
}

void check_square(const Matrix& M, int d, const char* name) {
  if (M.rows() != d || M.cols() != d) {
    throw DimensionError(std::string("haar check: operator ") + name + " must be " +
                         std::to_string(d) + "x" + std::to_string(d));
  }
}

int checked_dim(std::initializer_list<const Matrix*> ops, bool needs_two) {
  const int d = static_cast<int>((*ops.begin())->rows());
  const char* names[] = {"X", "Y", "Z", "W"};
  int k = 0;
  for (const Matrix* m : ops) check_square(*m, d, names[k++]);
  if (needs_two && d < 2) {
    throw DimensionError("haar check: dimension 1 is degenerate (d^2 - 1 = 0)");
  }
  return d;
}

}  // namespace

HaarCheckResult check_first_moment(const Matrix& X, const Matrix& Y, std::size_t n_samples,
                                   Seed seed, Exec exec) {
  const int d = checked_dim({&X, &Y}, false);
  return monte_carlo(
      d, n_samples, seed, exec,
      [&](const Matrix& U) -> Complex { return (U * X * U.adjoint() * Y).trace(); },
      first_moment_rhs(X, Y));
}

HaarCheckResult check_second_moment(const Matrix& X, const Matrix& Y, const Matrix& Z,
                                    const Matrix& W, std::size_t n_samples, Seed seed, Exec exec) {
  const int d = checked_dim({&X, &Y, &Z, &W}, true);
  return monte_carlo(
      d, n_samples, seed, exec,
      [&](const Matrix& U) -> Complex {
        const Matrix Ud = U.adjoint();
        return (U * X * Ud * Y).trace() * (U * Z * Ud * W).trace();
      },
      second_moment_rhs(X, Y, Z, W));
}

HaarCheckResult check_interleaved_moment(const Matrix& X, const Matrix& Y, const Matrix& Z,
                                         const Matrix& W, std::size_t n_samples, Seed seed,
                                         Exec exec) {
  const int d = checked_dim({&X, &Y, &Z, &W}, true);
  return monte_carlo(
      d, n_samples, seed, exec,
      [&](const Matrix& U) -> Complex {
        const Matrix Ud = U.adjoint();
        return (U * X * Ud * Y * U * Z * Ud * W).trace();
      },
      interleaved_moment_rhs(X, Y, Z, W));
}

std::vector<Matrix> probe_operators(int d, Seed seed) {
  if (d < 1 || d > kMaxHaarDim) throw SizeError("probe_operators: dimension out of range");
  Matrix rank_one = Matrix::Zero(d, d);
  rank_one(0, 0) = 1.0;

  Matrix half = Matrix::Zero(d, d);
  for (int i = 0; i < std::max(1, d / 2); ++i) half(i, i) = 1.0;

  // X on the most significant qubit (a swap of the two halves) plus I / 2.
  Matrix shifted_x = 0.5 * Matrix::Identity(d, d);
  if (d >= 2) {
    const int h = d / 2;
    for (int i = 0; i < h; ++i) {
      shifted_x(i, i + h) += 1.0;
      shifted_x(i + h, i) += 1.0;
    }
  }

  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix A(d, d);
  for (int j = 0; j < d; ++j) {
    for (int i = 0; i < d; ++i) A(i, j) = Complex(normal(rng), normal(rng));
  }
  Matrix hermitian = 0.5 * (A + A.adjoint());
  return {rank_one, half, shifted_x, hermitian};
}

std::vector<HaarSuiteRow> haar_suite(int d, std::size_t n_samples, Seed seed, Exec exec) {
  const auto ops = probe_operators(d, derive_seed(seed, {0xa11ce}));
  const auto& X = ops[0];
  const auto& Y = ops[1];
  const auto& Z = ops[2];
  const auto& W = ops[3];
  return {
      {"first", check_first_moment(X, Y, n_samples, derive_seed(seed, {1}), exec)},
      {"second", check_second_moment(X, Y, Z, W, n_samples, derive_seed(seed, {2}), exec)},
      {"interleaved", check_interleaved_moment(X, Y, Z, W, n_samples, derive_seed(seed, {3}), exec)},
  };
}

namespace {

struct ScanProblem {
  qsim::Ansatz ansatz;
  cost::CostSpec spec;
  std::size_t mu;
};

ScanProblem make_problem(int n, const ScanOptions& opts) {
  if (n < 2) throw ArgumentError("variance scan: need at least 2 qubits");
  const int rows = n % 2 == 0 ? 2 : 1;
  const int cols = n / rows;
  auto ansatz = qsim::build_zhu_star_ansatz(rows, cols, opts.layers(n));
  cost::CostSpec spec;
  spec.clip_epsilon = opts.clip_epsilon;
  if (opts.target == ScanTarget::Bas) {
    if (n % 2 != 0) throw ArgumentError("variance scan: BAS targets need an even qubit count");
    spec.target = bas::target_distribution(bas::bas_ensemble(rows, cols));
  } else {
    const std::size_t dim = std::size_t{1} << n;
    spec.target.assign(dim, 1.0 / static_cast<double>(dim));
  }
  const std::size_t mu = opts.param_index(ansatz.n_params());
  if (mu >= ansatz.n_params()) throw IndexError("variance scan: parameter index out of range");
  return {std::move(ansatz), std::move(spec), mu};
}

}  // namespace

std::vector<double> gradient_samples(int n_qubits, const ScanOptions& opts, Exec exec) {
  const auto problem = make_problem(n_qubits, opts);
  const std::size_t m = problem.ansatz.n_params();
  std::vector<double> out(opts.n_theta_samples);
  for_each_index(exec, opts.n_theta_samples, [&](std::size_t s) {
    Rng rng(derive_seed(opts.seed, {static_cast<std::uint64_t>(n_qubits), s}));
    std::uniform_real_distribution<double> uniform(-opts.box_half_width, opts.box_half_width);
    std::vector<double> theta(m);
    for (double& t : theta) t = uniform(rng);
    out[s] = cost::parameter_shift_partial(problem.ansatz, theta, problem.spec, problem.mu);
  });
  return out;
}

VarianceScanResult gradient_variance_scan(const ScanOptions& opts, Exec exec) {
  if (opts.qubit_counts.empty()) throw ArgumentError("variance scan: no qubit counts");
  if (!std::is_sorted(opts.qubit_counts.begin(), opts.qubit_counts.end()) ||
      std::adjacent_find(opts.qubit_counts.begin(), opts.qubit_counts.end()) != opts.qubit_counts.end()) {
    throw ArgumentError("variance scan: qubit counts must be strictly increasing");
  }
  if (opts.n_theta_samples < 2) throw ArgumentError("variance scan: need at least 2 samples");

  VarianceScanResult r;
  r.qubit_counts = opts.qubit_counts;
  r.n_theta_samples = opts.n_theta_samples;
  for (int n : opts.qubit_counts) {
    const auto g = gradient_samples(n, opts, exec);
    double mean = 0.0;
    for (double v : g) mean += v;
    mean /= static_cast<double>(g.size());
    double var = 0.0;
    for (double v : g) var += (v - mean) * (v - mean);
    var /= static_cast<double>(g.size() - 1);
    r.means.push_back(mean);
    r.variances.push_back(var);
    r.param_indices.push_back(make_problem(n, opts).mu);
  }

  if (r.qubit_counts.size() >= 2) {
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const double k = static_cast<double>(r.qubit_counts.size());
    for (std::size_t i = 0; i < r.qubit_counts.size(); ++i) {
      const double x = r.qubit_counts[i];
      const double y = std::log(std::max(r.variances[i], std::numeric_limits<double>::min()));
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    r.fit_slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
  }
  return r;
}

}  // namespace fastslow::plateau
