#include "fastslow/qsim.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <string>

#include "fastslow/error.hpp"

namespace fastslow::qsim {

const char* to_string(GateKind kind) {
  switch (kind) {
    case GateKind::RX:
      return "RX";
    case GateKind::RZ:
      return "RZ";
    case GateKind::RXX:
      return "RXX";
  }
  return "?";
}

Statevector::Statevector(int n_qubits) : n_qubits_(n_qubits) {
  if (n_qubits < 1 || n_qubits > kMaxQubits) {
    throw SizeError("statevector: n_qubits must be in [1, " + std::to_string(kMaxQubits) +
                    "], got " + std::to_string(n_qubits));
  }
  amps_.assign(std::size_t{1} << n_qubits, Complex{0.0, 0.0});
  amps_[0] = 1.0;
}

Statevector Statevector::from_amplitudes(std::vector<Complex> amplitudes) {
  const std::size_t dim = amplitudes.size();
  if (dim < 2 || !std::has_single_bit(dim) || dim > (std::size_t{1} << kMaxQubits)) {
    throw SizeError("statevector: amplitude count must be a power of two >= 2");
  }
  Statevector s;
  s.n_qubits_ = std::countr_zero(dim);
  s.amps_ = std::move(amplitudes);
  return s;
}

double Statevector::norm() const {
  double acc = 0.0;
  for (const auto& a : amps_) acc += std::norm(a);
  return std::sqrt(acc);
}

Statevector zero_state(int n_qubits) { return Statevector(n_qubits); }

namespace {

void check_qubit(int n_qubits, int q) {
  if (q < 0 || q >= n_qubits) {
    throw IndexError("gate: qubit index " + std::to_string(q) + " out of range for " +
                     std::to_string(n_qubits) + " qubits");
  }
}

void apply_rx(std::span<Complex> amps, std::size_t mask, double angle) {
  const double c = std::cos(angle);
  const Complex is{0.0, std::sin(angle)};
  const std::size_t dim = amps.size();
  for (std::size_t i = 0; i < dim; ++i) {
    if (i & mask) continue;
    const Complex a0 = amps[i];
    const Complex a1 = amps[i | mask];
    amps[i] = c * a0 + is * a1;
    amps[i | mask] = is * a0 + c * a1;
  }
}

void apply_rz(std::span<Complex> amps, std::size_t mask, double angle) {
  const Complex p0 = std::polar(1.0, angle);
  const Complex p1 = std::conj(p0);
  const std::size_t dim = amps.size();
  for (std::size_t i = 0; i < dim; ++i) amps[i] *= (i & mask) ? p1 : p0;
}

void apply_rxx(std::span<Complex> amps, std::size_t mask_a, std::size_t mask_b, double angle) {
  const double c = std::cos(angle);
  const Complex mis{0.0, -std::sin(angle)};
  const std::size_t flip = mask_a | mask_b;
  const std::size_t dim = amps.size();
  // Pairs (i, i ^ flip) with bit a of i clear cover every amplitude once.
  for (std::size_t i = 0; i < dim; ++i) {
    if (i & mask_a) continue;
    const std::size_t j = i ^ flip;
    const Complex ai = amps[i];
    const Complex aj = amps[j];
    amps[i] = c * ai + mis * aj;
    amps[j] = c * aj + mis * ai;
  }
}

}  // namespace

void apply_gate_inplace(Statevector& state, const GateOp& gate, double angle) {
  const int n = state.n_qubits();
  check_qubit(n, gate.qubits[0]);
  auto amps = state.amplitudes();
  switch (gate.kind) {
    case GateKind::RX:
      apply_rx(amps, qubit_mask(n, gate.qubits[0]), angle);
      break;
    case GateKind::RZ:
      apply_rz(amps, qubit_mask(n, gate.qubits[0]), angle);
      break;
    case GateKind::RXX:
      check_qubit(n, gate.qubits[1]);
      if (gate.qubits[0] == gate.qubits[1]) {
        throw IndexError("gate: RXX needs two distinct qubits");
      }
      apply_rxx(amps, qubit_mask(n, gate.qubits[0]), qubit_mask(n, gate.qubits[1]), angle);
      break;
  }
}

Statevector apply_gate(Statevector state, const GateOp& gate, double angle) {
  apply_gate_inplace(state, gate, angle);
  return state;
}

std::vector<Complex> gate_matrix(GateKind kind, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  const Complex I{0.0, 1.0};
  switch (kind) {
    case GateKind::RX:
      return {c, I * s, I * s, c};
    case GateKind::RZ:
      return {std::polar(1.0, angle), 0.0, 0.0, std::polar(1.0, -angle)};
    case GateKind::RXX: {
      std::vector<Complex> m(16, 0.0);
      for (int r = 0; r < 4; ++r) {
        m[r * 4 + r] = c;
        m[r * 4 + (3 - r)] = -I * s;
      }
      return m;
    }
  }
  return {};
}

Ansatz::Ansatz(int n_qubits, std::vector<GateOp> gates, std::size_t n_params, Layout layout,
               int entangling_layers)
    : n_qubits_(n_qubits),
      gates_(std::move(gates)),
      n_params_(n_params),
      layout_(layout),
      entangling_layers_(entangling_layers) {
  if (n_qubits < 1 || n_qubits > kMaxQubits) {
    throw SizeError("ansatz: n_qubits out of range: " + std::to_string(n_qubits));
  }
  std::vector<bool> used(n_params, false);
  for (const auto& g : gates_) {
    check_qubit(n_qubits, g.qubits[0]);
    if (g.kind == GateKind::RXX) {
      check_qubit(n_qubits, g.qubits[1]);
      if (g.qubits[0] == g.qubits[1]) throw IndexError("ansatz: RXX needs two distinct qubits");
    }
    if (g.param_index >= n_params) {
      throw IndexError("ansatz: gate references parameter " + std::to_string(g.param_index) +
                       " but n_params = " + std::to_string(n_params));
    }
    used[g.param_index] = true;
  }
  for (std::size_t p = 0; p < n_params; ++p) {
    if (!used[p]) throw ArgumentError("ansatz: parameter " + std::to_string(p) + " is unused");
  }
  free_.resize(n_params);
  std::iota(free_.begin(), free_.end(), std::size_t{0});
}

Ansatz Ansatz::with_mask(std::span<const std::size_t> frozen) const {
  Ansatz out = *this;
  out.mask_.assign(n_params_, false);
  for (std::size_t p : frozen) {
    if (p >= n_params_) {
      throw IndexError("ansatz: mask index " + std::to_string(p) + " out of range");
    }
    out.mask_[p] = true;
  }
  out.free_.clear();
  for (std::size_t p = 0; p < n_params_; ++p) {
    if (!out.mask_[p]) out.free_.push_back(p);
  }
  return out;
}

std::vector<std::size_t> Ansatz::frozen_params() const {
  std::vector<std::size_t> out;
  for (std::size_t p = 0; p < mask_.size(); ++p) {
    if (mask_[p]) out.push_back(p);
  }
  return out;
}

std::vector<double> Ansatz::expand(std::span<const double> free_theta) const {
  if (free_theta.size() != free_.size()) {
    throw DimensionError("ansatz: expected " + std::to_string(free_.size()) +
                         " free parameters, got " + std::to_string(free_theta.size()));
  }
  std::vector<double> theta(n_params_, 0.0);
  for (std::size_t k = 0; k < free_.size(); ++k) theta[free_[k]] = free_theta[k];
  return theta;
}

std::vector<double> Ansatz::compress(std::span<const double> theta) const {
  if (theta.size() != n_params_) {
    throw DimensionError("ansatz: expected " + std::to_string(n_params_) + " parameters, got " +
                         std::to_string(theta.size()));
  }
  std::vector<double> out(free_.size());
  for (std::size_t k = 0; k < free_.size(); ++k) out[k] = theta[free_[k]];
  return out;
}

std::vector<std::size_t> Ansatz::gates_using(std::size_t param) const {
  std::vector<std::size_t> out;
  for (std::size_t g = 0; g < gates_.size(); ++g) {
    if (gates_[g].param_index == param) out.push_back(g);
  }
  return out;
}

Ansatz build_zhu_star_ansatz(int n_rows, int n_cols, int entangling_layers) {
  if (n_rows < 1 || n_cols < 1) throw ConfigError("ansatz: grid dimensions must be >= 1");
  const int n = n_rows * n_cols;
  if (n < 2) throw ConfigError("ansatz: star ansatz needs at least 2 qubits");
  if (n > kMaxQubits) throw SizeError("ansatz: grid exceeds " + std::to_string(kMaxQubits) + " qubits");
  if (entangling_layers < 1) throw ConfigError("ansatz: entangling_layers must be >= 1");

  std::vector<GateOp> gates;
  std::size_t p = 0;
  auto rotation_layer = [&] {
    for (int q = 0; q < n; ++q) {
      gates.push_back(GateOp::rx(q, p++));  // gamma
      gates.push_back(GateOp::rz(q, p++));  // beta
      gates.push_back(GateOp::rx(q, p++));  // alpha
    }
  };
  for (int layer = 0; layer < entangling_layers; ++layer) {
    rotation_layer();
    for (int j = 1; j < n; ++j) gates.push_back(GateOp::rxx(0, j, p++));
  }
  rotation_layer();
  return Ansatz(n, std::move(gates), p, Layout::ZhuStar, entangling_layers);
}

void run_gates(Statevector& state, std::span<const GateOp> gates, std::span<const double> theta) {
  for (const auto& g : gates) apply_gate_inplace(state, g, theta[g.param_index]);
}

Statevector run_circuit(const Ansatz& ansatz, std::span<const double> theta,
                        std::optional<GateShift> shift) {
  if (theta.size() != ansatz.n_params()) {
    throw DimensionError("run_circuit: expected " + std::to_string(ansatz.n_params()) +
                         " parameters, got " + std::to_string(theta.size()));
  }
  for (std::size_t p : ansatz.frozen_params()) {
    if (theta[p] != 0.0) {
      throw ArgumentError("run_circuit: masked parameter " + std::to_string(p) + " must be 0");
    }
  }
  Statevector state(ansatz.n_qubits());
  const auto gates = ansatz.gates();
  for (std::size_t k = 0; k < gates.size(); ++k) {
    double angle = theta[gates[k].param_index];
    if (shift && shift->gate_index == k) angle += shift->delta;
    apply_gate_inplace(state, gates[k], angle);
  }
  return state;
}

std::vector<double> probabilities(const Statevector& state) {
  std::vector<double> p(state.dim());
  const auto amps = state.amplitudes();
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::norm(amps[i]);
  return p;
}

EmpiricalDistribution sample_counts(std::span<const double> dist, std::uint64_t n_shots,
                                    Seed seed) {
  if (n_shots == 0) throw ArgumentError("sample_counts: n_shots must be >= 1");
  if (dist.empty()) throw ArgumentError("sample_counts: empty distribution");

  std::vector<double> cdf(dist.size());
  std::partial_sum(dist.begin(), dist.end(), cdf.begin());
  const double total = cdf.back();

  EmpiricalDistribution out;
  out.shots = n_shots;
  out.counts.assign(dist.size(), 0);
  Rng rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, total);
  for (std::uint64_t s = 0; s < n_shots; ++s) {
    const double u = uniform(rng);
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    std::size_t idx = static_cast<std::size_t>(it - cdf.begin());
    // Never land on a zero-probability outcome through rounding at the top.
    if (idx >= dist.size()) idx = dist.size() - 1;
    while (dist[idx] <= 0.0 && idx > 0) --idx;
    ++out.counts[idx];
  }
  out.frequencies.resize(dist.size());
  const double inv = 1.0 / static_cast<double>(n_shots);
  for (std::size_t i = 0; i < dist.size(); ++i) {
    out.frequencies[i] = static_cast<double>(out.counts[i]) * inv;
  }
  return out;
}

}  // namespace fastslow::qsim
