#pragma once

// Gaussian-process regression with an isotropic Matern-5/2 kernel and a
// constant prior mean equal to the sample mean of the observations. Inputs
// live in the unit box; callers scale with optim::Box.

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <vector>

#include "fastslow/parallel.hpp"

namespace fastslow::optim {

/// k(r) = s2 (1 + sqrt5 r / l + 5 r^2 / (3 l^2)) exp(-sqrt5 r / l)
double matern52(double distance, double lengthscale, double signal_variance);

struct GpHyper {
  double lengthscale = 1.0;
  double signal_variance = 1.0;
  double noise_variance = 1e-6;
};

struct HyperGrid {
  std::vector<double> lengthscales;
  std::vector<double> signal_variances;
  double noise_variance = 1e-6;

  /// 8 lengthscales in {0.1 .. 3.0} * sqrt(dim) and 4 signal variances
  /// scaled by the sample variance of `y`.
  static HyperGrid defaults(std::size_t dim, std::span<const double> y, double noise_variance);
  /// A one-point grid.
  static HyperGrid single(const GpHyper& h);
};

struct Posterior {
  double mean = 0.0;
  double variance = 0.0;
};

inline constexpr double kMinNoiseVariance = 1e-10;
inline constexpr double kMaxJitter = 1e-4;

class GpSurrogate {
 public:
  /// Fits on rows of `X` (unit box) and `y`; hyperparameters maximize the log
  /// marginal likelihood over `grid`. Throws NumericalError if K + s_n^2 I
  /// cannot be factorized even with jitter up to kMaxJitter.
  static GpSurrogate fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                         const HyperGrid& grid);

  /// Appends one observation keeping the hyperparameters: O(n^2) extension of
  /// the Cholesky factor.
  void add_observation(const Eigen::VectorXd& x, double y);

  Posterior posterior(const Eigen::VectorXd& x) const;
  /// Posterior at each column of `Xq`, evaluated in fixed-size column blocks.
  std::vector<Posterior> posterior_batch(const Eigen::MatrixXd& Xq,
                                         Exec exec = Exec::Parallel) const;

  const GpHyper& hyper() const { return hyper_; }
  double log_marginal_likelihood() const { return lml_; }
  double prior_mean() const { return mean_; }
  double jitter() const { return jitter_; }
  std::size_t size() const { return static_cast<std::size_t>(y_.size()); }
  std::size_t dim() const { return static_cast<std::size_t>(X_.cols()); }
  double best_observed() const { return y_.minCoeff(); }
  Eigen::Index argmin_observed() const;
  const Eigen::MatrixXd& inputs() const { return X_; }
  const Eigen::VectorXd& outputs() const { return y_; }
  /// Lower-triangular factor of K + (s_n^2 + jitter) I.
  const Eigen::MatrixXd& cholesky() const { return L_; }

 private:
  void refresh_weights();

  Eigen::MatrixXd X_;  // n x d
  Eigen::VectorXd y_;
  GpHyper hyper_;
  double jitter_ = 0.0;
  double mean_ = 0.0;
  double lml_ = 0.0;
  Eigen::MatrixXd L_;
  Eigen::VectorXd alpha_;
};

/// Fits a surrogate on row-major samples; convenience over GpSurrogate::fit.
GpSurrogate gp_fit(const std::vector<std::vector<double>>& X, std::span<const double> y,
                   const HyperGrid& grid);

Posterior gp_posterior(const GpSurrogate& s, std::span<const double> x);

}  // namespace fastslow::optim
