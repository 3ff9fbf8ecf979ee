#include "fastslow/bas.hpp"

#include <algorithm>
#include <numbers>
#include <string>

#include "fastslow/error.hpp"

namespace fastslow::bas {

bool BasEnsemble::contains(std::uint64_t index) const {
  return std::binary_search(patterns.begin(), patterns.end(), index);
}

std::uint64_t pixel_bit(int n_rows, int n_cols, int r, int c) {
  const int n = n_rows * n_cols;
  return std::uint64_t{1} << (n - 1 - (r * n_cols + c));
}

bool is_bas_pattern(int n_rows, int n_cols, std::uint64_t index) {
  auto px = [&](int r, int c) { return (index & pixel_bit(n_rows, n_cols, r, c)) != 0; };
  bool rows_uniform = true;
  for (int r = 0; r < n_rows && rows_uniform; ++r) {
    for (int c = 1; c < n_cols; ++c) {
      if (px(r, c) != px(r, 0)) {
        rows_uniform = false;
        break;
      }
    }
  }
  if (rows_uniform) return true;
  for (int c = 0; c < n_cols; ++c) {
    for (int r = 1; r < n_rows; ++r) {
      if (px(r, c) != px(0, c)) return false;
    }
  }
  return true;
}

BasEnsemble bas_ensemble(int n_rows, int n_cols) {
  if (n_rows < 1 || n_cols < 1) throw ArgumentError("bas: grid dimensions must be >= 1");
  if (n_rows * n_cols > kMaxPixels) {
    throw SizeError("bas: grid " + std::to_string(n_rows) + "x" + std::to_string(n_cols) +
                    " exceeds " + std::to_string(kMaxPixels) + " pixels");
  }
  BasEnsemble e{n_rows, n_cols, {}};
  e.patterns.reserve((std::size_t{1} << n_rows) + (std::size_t{1} << n_cols));

  for (std::uint64_t rows = 0; rows < (std::uint64_t{1} << n_rows); ++rows) {
    std::uint64_t idx = 0;
    for (int r = 0; r < n_rows; ++r) {
      if (rows >> r & 1U) {
        for (int c = 0; c < n_cols; ++c) idx |= pixel_bit(n_rows, n_cols, r, c);
      }
    }
    e.patterns.push_back(idx);
  }
  for (std::uint64_t cols = 0; cols < (std::uint64_t{1} << n_cols); ++cols) {
    std::uint64_t idx = 0;
    for (int c = 0; c < n_cols; ++c) {
      if (cols >> c & 1U) {
        for (int r = 0; r < n_rows; ++r) idx |= pixel_bit(n_rows, n_cols, r, c);
      }
    }
    e.patterns.push_back(idx);
  }
  std::sort(e.patterns.begin(), e.patterns.end());
  e.patterns.erase(std::unique(e.patterns.begin(), e.patterns.end()), e.patterns.end());
  return e;
}

std::vector<double> target_distribution(const BasEnsemble& ensemble) {
  std::vector<double> q(ensemble.n_states(), 0.0);
  const double mass = 1.0 / static_cast<double>(ensemble.patterns.size());
  for (auto idx : ensemble.patterns) q[idx] = mass;
  return q;
}

QbasReport qbas_score(std::span<const std::uint64_t> counts, const BasEnsemble& ensemble) {
  if (counts.size() != ensemble.n_states()) {
    throw DimensionError("qbas: counts length " + std::to_string(counts.size()) +
                         " does not match 2^" + std::to_string(ensemble.n_pixels()));
  }
  QbasReport rep;
  std::uint64_t hits = 0;
  std::size_t distinct = 0;
  for (std::uint64_t c : counts) rep.n_samples += c;
  for (auto idx : ensemble.patterns) {
    hits += counts[idx];
    if (counts[idx] > 0) ++distinct;
  }
  if (rep.n_samples == 0) throw ArgumentError("qbas: need at least one sample");
  rep.precision = static_cast<double>(hits) / static_cast<double>(rep.n_samples);
  rep.recall = static_cast<double>(distinct) / static_cast<double>(ensemble.patterns.size());
  const double denom = rep.precision + rep.recall;
  rep.score = denom > 0.0 ? 2.0 * rep.precision * rep.recall / denom : 0.0;
  return rep;
}

double expected_measurements(const BasEnsemble& ensemble) {
  const std::size_t n = ensemble.patterns.size();
  double harmonic = 0.0;
  for (std::size_t k = n; k >= 1; --k) harmonic += 1.0 / static_cast<double>(k);
  return static_cast<double>(n) * harmonic;
}

double expected_measurements_asymptotic(const BasEnsemble& ensemble) {
  const int k = std::max(ensemble.n_rows, ensemble.n_cols);
  return static_cast<double>(std::uint64_t{1} << k) * (k + std::numbers::egamma);
}

std::uint64_t transpose_pattern(int n_rows, int n_cols, std::uint64_t index) {
  std::uint64_t out = 0;
  for (int r = 0; r < n_rows; ++r) {
    for (int c = 0; c < n_cols; ++c) {
      if (index & pixel_bit(n_rows, n_cols, r, c)) out |= pixel_bit(n_cols, n_rows, c, r);
    }
  }
  return out;
}

}  // namespace fastslow::bas
