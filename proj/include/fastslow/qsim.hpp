#pragma once

// Dense statevector simulation of the trapped-ion gate set {RX, RZ, RXX}
// and the star-graph ansatz used for Bars-and-Stripes training.
//
// Conventions:
//   RX(t)  = exp(+i t X)       = cos t I + i sin t X
//   RZ(t)  = exp(+i t Z)       = diag(e^{it}, e^{-it})
//   RXX(t) = exp(-i t X (x) X) = cos t I - i sin t X (x) X
// Qubit 0 is the most significant bit of a basis-state index, so pixel
// (r, c) of an R x C grid maps to qubit r*C + c and to bit (n-1-q).

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fastslow/rng.hpp"

namespace fastslow::qsim {

using Complex = std::complex<double>;

inline constexpr int kMaxQubits = 24;

enum class GateKind { RX, RZ, RXX };

const char* to_string(GateKind kind);

/// One parameterized gate. `qubits[1]` is only meaningful for RXX.
struct GateOp {
  GateKind kind = GateKind::RX;
  std::array<int, 2> qubits{0, 0};
  std::size_t param_index = 0;

  int arity() const { return kind == GateKind::RXX ? 2 : 1; }

  static GateOp rx(int q, std::size_t p) { return {GateKind::RX, {q, q}, p}; }
  static GateOp rz(int q, std::size_t p) { return {GateKind::RZ, {q, q}, p}; }
  static GateOp rxx(int a, int b, std::size_t p) { return {GateKind::RXX, {a, b}, p}; }
};

class Statevector {
 public:
  /// |0...0> on `n_qubits` qubits. Throws SizeError outside [1, kMaxQubits].
  explicit Statevector(int n_qubits);

  /// Takes ownership of explicit amplitudes; length must be a power of two.
  /// The vector is not renormalized.
  static Statevector from_amplitudes(std::vector<Complex> amplitudes);

  int n_qubits() const { return n_qubits_; }
  std::size_t dim() const { return amps_.size(); }

  std::span<const Complex> amplitudes() const { return amps_; }
  std::span<Complex> amplitudes() { return amps_; }
  const Complex& operator[](std::size_t i) const { return amps_[i]; }

  double norm() const;

 private:
  Statevector() = default;

  int n_qubits_ = 0;
  std::vector<Complex> amps_;
};

Statevector zero_state(int n_qubits);

/// Bit mask of `qubit` inside a basis index of an `n_qubits` register.
inline std::size_t qubit_mask(int n_qubits, int qubit) {
  return std::size_t{1} << (n_qubits - 1 - qubit);
}

/// Applies the gate to `state` in place. Throws IndexError on bad qubits.
void apply_gate_inplace(Statevector& state, const GateOp& gate, double angle);

/// Value-returning wrapper around apply_gate_inplace.
Statevector apply_gate(Statevector state, const GateOp& gate, double angle);

/// Dense row-major matrix of a gate acting on its own 1 or 2 qubits, in the
/// same bit-order convention as the simulator (first listed qubit = MSB).
std::vector<Complex> gate_matrix(GateKind kind, double angle);

enum class Layout { ZhuStar, Custom };

class Ansatz {
 public:
  /// Validates gate arity, qubit ranges and parameter coverage.
  Ansatz(int n_qubits, std::vector<GateOp> gates, std::size_t n_params,
         Layout layout = Layout::Custom, int entangling_layers = 0);

  int n_qubits() const { return n_qubits_; }
  std::size_t n_params() const { return n_params_; }
  std::span<const GateOp> gates() const { return gates_; }
  Layout layout() const { return layout_; }
  int entangling_layers() const { return entangling_layers_; }

  /// Returns a copy with `frozen` parameter indices pinned to zero.
  Ansatz with_mask(std::span<const std::size_t> frozen) const;

  bool is_masked(std::size_t param) const { return !mask_.empty() && mask_[param]; }
  std::vector<std::size_t> frozen_params() const;
  /// Parameter indices an optimizer may move, ascending.
  std::span<const std::size_t> free_params() const { return free_; }
  std::size_t n_free() const { return free_.size(); }

  /// Scatters a free-parameter vector into a full theta with zeros at masked
  /// slots. Throws DimensionError on length mismatch.
  std::vector<double> expand(std::span<const double> free_theta) const;
  /// Inverse of expand: gathers the free components of a full theta.
  std::vector<double> compress(std::span<const double> theta) const;

  /// Gate indices that read parameter `param`.
  std::vector<std::size_t> gates_using(std::size_t param) const;

 private:
  int n_qubits_;
  std::vector<GateOp> gates_;
  std::size_t n_params_;
  Layout layout_;
  int entangling_layers_;
  std::vector<bool> mask_;
  std::vector<std::size_t> free_;
};

/// Star-graph trapped-ion ansatz for an n_rows x n_cols grid:
/// [rotation layer, entangling layer] * layers, then a final rotation layer.
/// Each rotation is RX(gamma), RZ(beta), RX(alpha) in application order,
/// each entangling layer is RXX(0, j) for j = 1..n-1.
/// Parameter count: layers * (4n - 1) + 3n.
Ansatz build_zhu_star_ansatz(int n_rows, int n_cols, int entangling_layers);

/// Optional perturbation of a single gate's angle, used by the shift rule.
struct GateShift {
  std::size_t gate_index;
  double delta;
};

/// U(theta)|0...0>. Throws DimensionError if |theta| != n_params and
/// ArgumentError if a masked parameter is nonzero.
Statevector run_circuit(const Ansatz& ansatz, std::span<const double> theta,
                        std::optional<GateShift> shift = std::nullopt);

/// Applies every gate of `gates` in order to `state`, reading angles from theta.
void run_gates(Statevector& state, std::span<const GateOp> gates,
               std::span<const double> theta);

/// Born probabilities |a_i|^2.
std::vector<double> probabilities(const Statevector& state);

struct EmpiricalDistribution {
  std::vector<std::uint64_t> counts;
  std::vector<double> frequencies;
  std::uint64_t shots = 0;
};

/// Multinomial draw of `n_shots` outcomes. Deterministic for a fixed seed.
/// Throws ArgumentError when n_shots == 0.
EmpiricalDistribution sample_counts(std::span<const double> dist, std::uint64_t n_shots,
                                    Seed seed);

}  // namespace fastslow::qsim
