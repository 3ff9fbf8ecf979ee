#include "fastslow/cost.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "fastslow/error.hpp"

namespace fastslow::cost {

namespace {

constexpr double kNormTolerance = 1e-6;
constexpr double kShift = std::numbers::pi / 4.0;

void check_normalized(std::span<const double> v, const char* what) {
  const double s = std::accumulate(v.begin(), v.end(), 0.0);
  if (std::abs(s - 1.0) > kNormTolerance) {
    throw ValidationError(std::string("kl_divergence: ") + what + " sums to " +
                          std::to_string(s) + ", expected 1");
  }
}

std::vector<double> distribution_at(const qsim::Ansatz& ansatz, std::span<const double> theta,
                                    const CostSpec& spec, Seed seed,
                                    std::optional<qsim::GateShift> shift = std::nullopt) {
  auto probs = qsim::probabilities(qsim::run_circuit(ansatz, theta, shift));
  if (spec.exact()) return probs;
  return qsim::sample_counts(probs, *spec.shots, seed).frequencies;
}

Seed base_seed(Seed seed) { return derive_seed(seed, {0}); }
Seed shift_seed(Seed seed, std::size_t gate, int sign) {
  return derive_seed(seed, {1, gate, static_cast<std::uint64_t>(sign > 0)});
}

double log_ratio(double c, double q, double eps) { return std::log(c / std::max(eps, q)); }

}  // namespace

void CostSpec::validate() const {
  if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0)) {
    throw ValidationError("cost: clip_epsilon must lie in (0, 1)");
  }
  if (target.empty()) throw ValidationError("cost: empty target distribution");
  const double s = std::accumulate(target.begin(), target.end(), 0.0);
  if (std::abs(s - 1.0) > kNormTolerance) throw ValidationError("cost: target must sum to 1");
  if (shots && *shots == 0) throw ValidationError("cost: shots must be >= 1");
}

double kl_divergence(std::span<const double> p, std::span<const double> q, double eps) {
  if (p.size() != q.size()) {
    throw DimensionError("kl_divergence: length mismatch " + std::to_string(p.size()) + " vs " +
                         std::to_string(q.size()));
  }
  if (!(eps > 0.0)) throw ValidationError("kl_divergence: eps must be > 0");
  check_normalized(p, "p");
  check_normalized(q, "q");
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) acc += p[i] * log_ratio(p[i], q[i], eps);
  }
  return acc;
}

std::vector<double> measured_distribution(const qsim::Ansatz& ansatz,
                                          std::span<const double> theta, const CostSpec& spec,
                                          Seed seed) {
  return distribution_at(ansatz, theta, spec, base_seed(seed));
}

double evaluate_cost(const qsim::Ansatz& ansatz, std::span<const double> theta,
                     const CostSpec& spec, Seed seed) {
  if (spec.target.size() != (std::size_t{1} << ansatz.n_qubits())) {
    throw DimensionError("evaluate_cost: target length does not match 2^n_qubits");
  }
  const auto p = measured_distribution(ansatz, theta, spec, seed);
  return kl_divergence(p, spec.target, spec.clip_epsilon);
}

std::vector<double> probability_derivative(const qsim::Ansatz& ansatz,
                                           std::span<const double> theta,
                                           const CostSpec& spec, std::size_t mu, Seed seed) {
  std::vector<double> d(std::size_t{1} << ansatz.n_qubits(), 0.0);
  if (mu >= ansatz.n_params()) throw IndexError("gradient: parameter index out of range");
  if (ansatz.is_masked(mu)) return d;
  for (std::size_t g : ansatz.gates_using(mu)) {
    const auto plus = distribution_at(ansatz, theta, spec, shift_seed(seed, g, +1),
                                      qsim::GateShift{g, +kShift});
    const auto minus = distribution_at(ansatz, theta, spec, shift_seed(seed, g, -1),
                                       qsim::GateShift{g, -kShift});
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += plus[i] - minus[i];
  }
  return d;
}

namespace {

double assemble(std::span<const double> dC, std::span<const double> C,
                std::span<const double> q, double eps) {
  double acc = 0.0;
  for (std::size_t i = 0; i < C.size(); ++i) {
    if (C[i] > 0.0) acc += dC[i] * log_ratio(C[i], q[i], eps);
  }
  return acc;
}

void check_inputs(const qsim::Ansatz& ansatz, std::span<const double> theta,
                  const CostSpec& spec) {
  if (theta.size() != ansatz.n_params()) {
    throw DimensionError("gradient: expected " + std::to_string(ansatz.n_params()) +
                         " parameters, got " + std::to_string(theta.size()));
  }
  if (spec.target.size() != (std::size_t{1} << ansatz.n_qubits())) {
    throw DimensionError("gradient: target length does not match 2^n_qubits");
  }
}

}  // namespace

GradientReport parameter_shift_gradient(const qsim::Ansatz& ansatz,
                                        std::span<const double> theta, const CostSpec& spec,
                                        Seed seed, Exec exec, bool keep_dC) {
  check_inputs(ansatz, theta, spec);
  const std::size_t m = ansatz.n_params();
  const auto C = measured_distribution(ansatz, theta, spec, seed);

  GradientReport rep;
  rep.gradient.assign(m, 0.0);
  if (keep_dC) rep.dC.assign(m, std::vector<double>(C.size(), 0.0));

  const auto free = ansatz.free_params();
  for_each_index(exec, free.size(), [&](std::size_t k) {
    const std::size_t mu = free[k];
    auto dC = probability_derivative(ansatz, theta, spec, mu, seed);
    rep.gradient[mu] = assemble(dC, C, spec.target, spec.clip_epsilon);
    if (keep_dC) rep.dC[mu] = std::move(dC);
  });

  std::uint64_t shifted = 0;
  for (std::size_t mu : free) shifted += ansatz.gates_using(mu).size();
  rep.evaluations_used = 2 * shifted + 1;
  return rep;
}

double parameter_shift_partial(const qsim::Ansatz& ansatz, std::span<const double> theta,
                               const CostSpec& spec, std::size_t mu, Seed seed) {
  check_inputs(ansatz, theta, spec);
  const auto C = measured_distribution(ansatz, theta, spec, seed);
  const auto dC = probability_derivative(ansatz, theta, spec, mu, seed);
  return assemble(dC, C, spec.target, spec.clip_epsilon);
}

}  // namespace fastslow::cost
