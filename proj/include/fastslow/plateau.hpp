#pragma once

// Monte-Carlo checks of the Haar-measure moment identities behind the
// barren-plateau argument, and a numerical scan of how the variance of a KL
// cost gradient shrinks with the qubit count.

#include <Eigen/Dense>
#include <complex>
#include <cstddef>
#include <functional>
#include <vector>

#include "fastslow/parallel.hpp"
#include "fastslow/rng.hpp"

namespace fastslow::plateau {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;

inline constexpr int kMaxHaarDim = 64;

/// Haar-distributed d x d unitary: QR of a complex Ginibre matrix with the
/// phases of R's diagonal folded into Q. Throws SizeError for d outside [1, 64].
Matrix haar_random_unitary(int d, Rng& rng);
Matrix haar_random_unitary(int d, Seed seed);

struct HaarCheckResult {
  int dimension = 0;
  std::size_t n_samples = 0;
  Complex mc_estimate;
  Complex analytic_value;
  double mc_std_error = 0.0;
  /// |mc - analytic| / std_error; 0 when every sample equals the analytic
  /// value exactly (zero-variance integrand).
  double z_score = 0.0;
  bool zero_variance = false;
};

// Closed-form Haar averages, d = dimension of the operators.
//   int Tr(U X U^+ Y)                 = Tr X Tr Y / d
//   int Tr(U X U^+ Y) Tr(U Z U^+ W)   = [TrX TrY TrZ TrW + Tr(XZ) Tr(YW)] / (d^2 - 1)
//                                      - [Tr(XZ) TrY TrW + TrX TrZ Tr(YW)] / (d^3 - d)
//   int Tr(U X U^+ Y U Z U^+ W)       = [TrX TrZ Tr(YW) + Tr(XZ) TrY TrW] / (d^2 - 1)
//                                      - [Tr(XZ) Tr(YW) + TrX TrY TrZ TrW] / (d (d^2 - 1))
Complex first_moment_rhs(const Matrix& X, const Matrix& Y);
Complex second_moment_rhs(const Matrix& X, const Matrix& Y, const Matrix& Z, const Matrix& W);
Complex interleaved_moment_rhs(const Matrix& X, const Matrix& Y, const Matrix& Z, const Matrix& W);

/// Number of independent sample streams; fixed so results do not depend on
/// the thread count.
inline constexpr std::size_t kMcBatches = 64;

HaarCheckResult check_first_moment(const Matrix& X, const Matrix& Y, std::size_t n_samples,
                                   Seed seed, Exec exec = Exec::Parallel);
/// Throws DimensionError for d == 1.
HaarCheckResult check_second_moment(const Matrix& X, const Matrix& Y, const Matrix& Z,
                                    const Matrix& W, std::size_t n_samples, Seed seed,
                                    Exec exec = Exec::Parallel);
/// Throws DimensionError for d == 1.
HaarCheckResult check_interleaved_moment(const Matrix& X, const Matrix& Y, const Matrix& Z,
                                         const Matrix& W, std::size_t n_samples, Seed seed,
                                         Exec exec = Exec::Parallel);

/// Fixed, non-trivial Hermitian probes for dimension d: a rank-one
/// projector, a half-rank projector, a shifted Pauli-X on the first qubit and
/// a seeded random Hermitian matrix.
std::vector<Matrix> probe_operators(int d, Seed seed);

struct HaarSuiteRow {
  const char* identity;
  HaarCheckResult result;
};

/// First, second and interleaved checks on probe_operators(d).
std::vector<HaarSuiteRow> haar_suite(int d, std::size_t n_samples, Seed seed,
                                     Exec exec = Exec::Parallel);

enum class ScanTarget { Uniform, Bas };

struct ScanOptions {
  std::vector<int> qubit_counts{2, 4, 6, 8};
  /// Entangling layers for n qubits; default 2n.
  std::function<int(int)> layers = [](int n) { return 2 * n; };
  /// Differentiated parameter for a given parameter count; default middle.
  std::function<std::size_t(std::size_t)> param_index = [](std::size_t m) { return m / 2; };
  std::size_t n_theta_samples = 200;
  ScanTarget target = ScanTarget::Uniform;
  double clip_epsilon = 1e-8;
  double box_half_width = 3.141592653589793;
  Seed seed = 0;
};

struct VarianceScanResult {
  std::vector<int> qubit_counts;
  std::vector<double> variances;
  std::vector<double> means;
  std::vector<std::size_t> param_indices;
  /// Least-squares slope of ln(variance) against n.
  double fit_slope = 0.0;
  std::size_t n_theta_samples = 0;
};

/// Exact dL/dtheta_mu at `n_theta_samples` uniform draws of theta, per
/// qubit count. Star ansatz on a 2 x n/2 grid (1 x n for odd n). BAS targets
/// need even n.
VarianceScanResult gradient_variance_scan(const ScanOptions& opts, Exec exec = Exec::Parallel);

/// The per-sample gradients for one qubit count (exposed for testing).
std::vector<double> gradient_samples(int n_qubits, const ScanOptions& opts, Exec exec = Exec::Parallel);

}  // namespace fastslow::plateau
