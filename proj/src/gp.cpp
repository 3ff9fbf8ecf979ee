#include "fastslow/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include "fastslow/error.hpp"

namespace fastslow::optim {

namespace {

const double kSqrt5 = std::sqrt(5.0);

Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  // rows of A against rows of B
  const Eigen::VectorXd a2 = A.rowwise().squaredNorm();
  const Eigen::VectorXd b2 = B.rowwise().squaredNorm();
  Eigen::MatrixXd D = -2.0 * A * B.transpose();
  D.colwise() += a2;
  D.rowwise() += b2.transpose();
  return D.cwiseMax(0.0);
}

Eigen::MatrixXd kernel_from_sq(const Eigen::MatrixXd& D2, double l, double s2) {
  return D2.unaryExpr([l, s2](double d2) { return matern52(std::sqrt(d2), l, s2); });
}

struct Factorization {
  Eigen::MatrixXd L;
  double jitter = 0.0;
  bool ok = false;
};

Factorization factorize(Eigen::MatrixXd K, double noise) {
  K.diagonal().array() += noise;
  Factorization f;
  for (double jitter = 0.0; jitter <= kMaxJitter * (1.0 + 1e-12);
       jitter = jitter == 0.0 ? 1e-10 : jitter * 10.0) {
    Eigen::MatrixXd Kj = K;
    if (jitter > 0.0) Kj.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(Kj);
    if (llt.info() == Eigen::Success) {
      Eigen::MatrixXd L = llt.matrixL();
      if (L.diagonal().minCoeff() > 0.0 && L.allFinite()) {
        f.L = std::move(L);
        f.jitter = jitter;
        f.ok = true;
        return f;
      }
    }
  }
  return f;
}

double lml_from(const Eigen::MatrixXd& L, const Eigen::VectorXd& centered,
                Eigen::VectorXd* alpha_out) {
  const Eigen::Index n = centered.size();
  Eigen::VectorXd tmp = L.triangularView<Eigen::Lower>().solve(centered);
  Eigen::VectorXd alpha = L.transpose().triangularView<Eigen::Upper>().solve(tmp);
  const double fit = -0.5 * centered.dot(alpha);
  const double logdet = L.diagonal().array().log().sum();
  if (alpha_out) *alpha_out = std::move(alpha);
  return fit - logdet - 0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
}

}  // namespace

double matern52(double distance, double lengthscale, double signal_variance) {
  const double r = kSqrt5 * distance / lengthscale;
  return signal_variance * (1.0 + r + r * r / 3.0) * std::exp(-r);
}

HyperGrid HyperGrid::defaults(std::size_t dim, std::span<const double> y, double noise_variance) {
  HyperGrid g;
  const double root = std::sqrt(static_cast<double>(std::max<std::size_t>(dim, 1)));
  for (double f : {0.1, 0.2, 0.35, 0.5, 0.75, 1.0, 2.0, 3.0}) g.lengthscales.push_back(f * root);
  double var = 0.0;
  if (y.size() >= 2) {
    const double m = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    for (double v : y) var += (v - m) * (v - m);
    var /= static_cast<double>(y.size() - 1);
  }
  var = std::max(var, 1e-4);
  for (double f : {0.25, 1.0, 4.0, 16.0}) g.signal_variances.push_back(f * var);
  g.noise_variance = std::max(noise_variance, kMinNoiseVariance);
  return g;
}

HyperGrid HyperGrid::single(const GpHyper& h) {
  return HyperGrid{{h.lengthscale}, {h.signal_variance}, std::max(h.noise_variance, kMinNoiseVariance)};
}

GpSurrogate GpSurrogate::fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                             const HyperGrid& grid) {
  if (X.rows() < 1 || X.rows() != y.size()) {
    throw ArgumentError("gp_fit: need |X| == |y| >= 1");
  }
  if (grid.lengthscales.empty() || grid.signal_variances.empty()) {
    throw ArgumentError("gp_fit: empty hyperparameter grid");
  }
  const double noise = std::max(grid.noise_variance, kMinNoiseVariance);
  const double mean = y.mean();
  const Eigen::VectorXd centered = y.array() - mean;
  const Eigen::MatrixXd D2 = squared_distances(X, X);

  GpSurrogate best;
  bool found = false;
  for (double l : grid.lengthscales) {
    const Eigen::MatrixXd unit = kernel_from_sq(D2, l, 1.0);
    for (double s2 : grid.signal_variances) {
      auto f = factorize(s2 * unit, noise);
      if (!f.ok) continue;
      Eigen::VectorXd alpha;
      const double lml = lml_from(f.L, centered, &alpha);
      if (!found || lml > best.lml_) {
        found = true;
        best.hyper_ = {l, s2, noise};
        best.jitter_ = f.jitter;
        best.lml_ = lml;
        best.L_ = std::move(f.L);
        best.alpha_ = std::move(alpha);
      }
    }
  }
  if (!found) {
    throw NumericalError("gp_fit: covariance not positive definite with jitter up to " +
                         std::to_string(kMaxJitter));
  }
  best.X_ = X;
  best.y_ = y;
  best.mean_ = mean;
  return best;
}

void GpSurrogate::refresh_weights() {
  mean_ = y_.mean();
  const Eigen::VectorXd centered = y_.array() - mean_;
  lml_ = lml_from(L_, centered, &alpha_);
}

void GpSurrogate::add_observation(const Eigen::VectorXd& x, double y) {
  if (x.size() != X_.cols()) throw DimensionError("gp: observation dimension mismatch");
  const Eigen::Index n = X_.rows();
  Eigen::VectorXd k(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i) = matern52((X_.row(i).transpose() - x).norm(), hyper_.lengthscale,
                    hyper_.signal_variance);
  }
  const Eigen::VectorXd l = L_.triangularView<Eigen::Lower>().solve(k);
  const double d2 = hyper_.signal_variance + hyper_.noise_variance + jitter_ - l.squaredNorm();

  X_.conservativeResize(n + 1, Eigen::NoChange);
  X_.row(n) = x.transpose();
  y_.conservativeResize(n + 1);
  y_(n) = y;

  if (!(d2 > 0.0)) {
    // Rank extension lost positive definiteness; refactorize with escalation.
    *this = fit(X_, y_, HyperGrid::single(hyper_));
    return;
  }
  L_.conservativeResize(n + 1, n + 1);
  L_.row(n).head(n) = l.transpose();
  L_.col(n).head(n).setZero();
  L_(n, n) = std::sqrt(d2);
  refresh_weights();
}

Posterior GpSurrogate::posterior(const Eigen::VectorXd& x) const {
  Eigen::MatrixXd q(x.size(), 1);
  q.col(0) = x;
  return posterior_batch(q, Exec::Serial).front();
}

std::vector<Posterior> GpSurrogate::posterior_batch(const Eigen::MatrixXd& Xq, Exec exec) const {
  if (Xq.rows() != X_.cols()) throw DimensionError("gp: query dimension mismatch");
  constexpr Eigen::Index kBlock = 128;
  const Eigen::Index m = Xq.cols();
  const std::size_t blocks = static_cast<std::size_t>((m + kBlock - 1) / kBlock);
  std::vector<Posterior> out(static_cast<std::size_t>(m));
  for_each_index(exec, blocks, [&](std::size_t b) {
    const Eigen::Index start = static_cast<Eigen::Index>(b) * kBlock;
    const Eigen::Index len = std::min(kBlock, m - start);
    const Eigen::MatrixXd Q = Xq.middleCols(start, len).transpose();
    const Eigen::MatrixXd Ks =
        kernel_from_sq(squared_distances(X_, Q), hyper_.lengthscale, hyper_.signal_variance);
    const Eigen::VectorXd mu = (Ks.transpose() * alpha_).array() + mean_;
    const Eigen::MatrixXd V = L_.triangularView<Eigen::Lower>().solve(Ks);
    const Eigen::VectorXd reduction = V.colwise().squaredNorm().transpose();
    for (Eigen::Index j = 0; j < len; ++j) {
      out[static_cast<std::size_t>(start + j)] = {
          mu(j), std::max(0.0, hyper_.signal_variance - reduction(j))};
    }
  });
  return out;
}

Eigen::Index GpSurrogate::argmin_observed() const {
  Eigen::Index idx = 0;
  y_.minCoeff(&idx);
  return idx;
}

GpSurrogate gp_fit(const std::vector<std::vector<double>>& X, std::span<const double> y,
                   const HyperGrid& grid) {
  if (X.empty() || X.size() != y.size()) throw ArgumentError("gp_fit: need |X| == |y| >= 1");
  const auto d = static_cast<Eigen::Index>(X.front().size());
  Eigen::MatrixXd M(static_cast<Eigen::Index>(X.size()), d);
  for (std::size_t i = 0; i < X.size(); ++i) {
    if (static_cast<Eigen::Index>(X[i].size()) != d) throw DimensionError("gp_fit: ragged inputs");
    for (Eigen::Index j = 0; j < d; ++j) M(static_cast<Eigen::Index>(i), j) = X[i][j];
  }
  Eigen::VectorXd Y = Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
  return GpSurrogate::fit(M, Y, grid);
}

Posterior gp_posterior(const GpSurrogate& s, std::span<const double> x) {
  Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  return s.posterior(v);
}

}  // namespace fastslow::optim
