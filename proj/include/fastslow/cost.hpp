#pragma once

// KL-divergence cost of a circuit's Born distribution against a target, and
// its gradient from parameter-shifted circuit executions.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fastslow/parallel.hpp"
#include "fastslow/qsim.hpp"
#include "fastslow/rng.hpp"

namespace fastslow::cost {

inline constexpr double kDefaultClipEpsilon = 1e-8;

struct CostSpec {
  std::vector<double> target;
  double clip_epsilon = kDefaultClipEpsilon;
  /// Shots per circuit execution; nullopt means exact probabilities.
  std::optional<std::uint64_t> shots;

  bool exact() const { return !shots.has_value(); }
  /// Throws ValidationError unless eps in (0, 1), target normalized, shots >= 1.
  void validate() const;
};

/// sum_i p_i log(p_i / max(eps, q_i)) with 0 log 0 = 0.
/// Throws ValidationError when either input is off normalization by > 1e-6.
double kl_divergence(std::span<const double> p, std::span<const double> q, double eps);

/// Exact probabilities or, in sampled mode, shot frequencies at theta.
std::vector<double> measured_distribution(const qsim::Ansatz& ansatz,
                                          std::span<const double> theta, const CostSpec& spec,
                                          Seed seed);

double evaluate_cost(const qsim::Ansatz& ansatz, std::span<const double> theta,
                     const CostSpec& spec, Seed seed);

struct GradientReport {
  std::vector<double> gradient;
  /// Row mu holds dC_i/dtheta_mu over all basis states; empty unless requested.
  std::vector<std::vector<double>> dC;
  std::uint64_t evaluations_used = 0;
};

/// Shift-rule gradient of the KL cost:
///   dC_i/dtheta_mu = C_i(theta_mu + pi/4) - C_i(theta_mu - pi/4)
///   dL/dtheta_mu   = sum_i dC_i log(C_i / max(eps, q_i))
/// Parameters shared by several gates shift each gate separately and sum.
/// Masked parameters get a zero component and cost no executions. Terms with
/// C_i == 0 contribute nothing. In sampled mode every shifted execution draws
/// a fresh shot batch from a stream derived from `seed`.
GradientReport parameter_shift_gradient(const qsim::Ansatz& ansatz,
                                        std::span<const double> theta, const CostSpec& spec,
                                        Seed seed = 0, Exec exec = Exec::Parallel,
                                        bool keep_dC = false);

/// Single component of the gradient above (same seeds as the full version).
double parameter_shift_partial(const qsim::Ansatz& ansatz, std::span<const double> theta,
                               const CostSpec& spec, std::size_t mu, Seed seed = 0);

/// Shift-rule derivative of each C_i with respect to parameter mu.
std::vector<double> probability_derivative(const qsim::Ansatz& ansatz,
                                           std::span<const double> theta,
                                           const CostSpec& spec, std::size_t mu, Seed seed);

}  // namespace fastslow::cost
