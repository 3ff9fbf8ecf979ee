#pragma once

// Bars-and-Stripes ensembles, their target distribution, the qBAS score and
// the coupon-collector estimate of how many shots reveal every pattern.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace fastslow::bas {

inline constexpr int kMaxPixels = 24;

struct BasEnsemble {
  int n_rows = 0;
  int n_cols = 0;
  /// Sorted, distinct basis-state indices of the valid patterns.
  std::vector<std::uint64_t> patterns;

  int n_pixels() const { return n_rows * n_cols; }
  std::size_t n_states() const { return std::size_t{1} << n_pixels(); }
  bool contains(std::uint64_t index) const;
};

struct QbasReport {
  double precision = 0.0;
  double recall = 0.0;
  double score = 0.0;
  std::uint64_t n_samples = 0;
};

/// Pixel (r, c) maps to qubit r*n_cols + c, and qubit 0 is the most
/// significant bit of the basis index.
std::uint64_t pixel_bit(int n_rows, int n_cols, int r, int c);

/// Row/column validity predicate on a single grid.
bool is_bas_pattern(int n_rows, int n_cols, std::uint64_t index);

/// All bars (full rows) and stripes (full columns) patterns; the all-white
/// and all-black grids appear once. Throws SizeError above kMaxPixels.
BasEnsemble bas_ensemble(int n_rows, int n_cols);

/// Uniform 1/|patterns| on every pattern, zero elsewhere.
std::vector<double> target_distribution(const BasEnsemble& ensemble);

/// Precision counts shots landing on patterns, recall counts distinct
/// patterns observed. p + r == 0 yields score 0.
QbasReport qbas_score(std::span<const std::uint64_t> counts, const BasEnsemble& ensemble);

/// N * H_N, the expected number of uniform draws to see all N patterns.
double expected_measurements(const BasEnsemble& ensemble);

/// 2^k (k + gamma) with k = max(n_rows, n_cols); the large-grid approximation.
double expected_measurements_asymptotic(const BasEnsemble& ensemble);

/// Transposes a pattern index of an n_rows x n_cols grid into the
/// corresponding n_cols x n_rows index.
std::uint64_t transpose_pattern(int n_rows, int n_cols, std::uint64_t index);

}  // namespace fastslow::bas
