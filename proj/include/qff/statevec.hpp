#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace qff {

using complex = std::complex<double>;

enum class GateKind { RY, RZ, CNOT, MULTIZ };

const char* gate_kind_name(GateKind kind);
GateKind parse_gate_kind(const std::string_view name);

// A gate with concrete qubits and angle, ready for simulation.
//
// Conventions:
//   RY(a)     = exp(-i a Y / 2)
//   RZ(a)     = exp(-i a Z / 2)
//   MULTIZ(a) = exp(-i a Z_{q0} Z_{q1} ... Z_{qk-1})   (no half factor)
//   CNOT      : qubits = {control, target}
struct BoundGate {
  GateKind kind = GateKind::RY;
  std::vector<int> qubits;
  double angle = 0.0;
};

// Dense N-qubit register. Qubit q is bit q of the basis index (little-endian).
class StateVector {
 public:
  static constexpr int kMaxQubits = 24;

  explicit StateVector(int num_qubits);

  int num_qubits() const noexcept { return num_qubits_; }
  std::size_t dim() const noexcept { return amps_.size(); }
  std::span<const complex> amplitudes() const noexcept { return amps_; }
  std::span<complex> amplitudes() noexcept { return amps_; }
  const complex& operator[](std::size_t i) const { return amps_[i]; }

  double norm_squared() const noexcept;

  void apply(const BoundGate& gate);
  // Skips validate_gate; only for gates already checked against this register.
  void apply_unchecked(const BoundGate& gate);
  void apply_ry(int qubit, double angle);
  void apply_rz(int qubit, double angle);
  void apply_cnot(int control, int target);
  // Diagonal phase exp(-i a Z...Z); the parity of the selected bits sets the sign.
  void apply_multiz(std::span<const int> qubits, double angle);
  // Same unitary as apply_multiz, realized as CNOT ladder + RZ(2a) + inverse ladder.
  void apply_multiz_ladder(std::span<const int> qubits, double angle);

  double expectation_z(int qubit) const;

 private:
  void check_qubit(int q) const;

  int num_qubits_;
  std::vector<complex> amps_;
};

StateVector init_zero(int num_qubits);

// Validates the gate against an N-qubit register; throws ArgumentError.
void validate_gate(const BoundGate& gate, int num_qubits);

StateVector apply_gate(StateVector state, const BoundGate& gate);
StateVector run_circuit(StateVector state, std::span<const BoundGate> gates);
double expectation_z(const StateVector& state, int qubit);

// Expands a MULTIZ gate into its CNOT-ladder decomposition.
std::vector<BoundGate> decompose_multiz(const BoundGate& gate);

}  // namespace qff
