#include "qff/statevec.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "qff/errors.hpp"

namespace qff {

const char* gate_kind_name(GateKind kind) {
  switch (kind) {
    case GateKind::RY:
      return "RY";
    case GateKind::RZ:
      return "RZ";
    case GateKind::CNOT:
      return "CNOT";
    case GateKind::MULTIZ:
      return "MULTIZ";
  }
  return "?";
}

GateKind parse_gate_kind(std::string_view name) {
  if (name == "RY") return GateKind::RY;
  if (name == "RZ") return GateKind::RZ;
  if (name == "CNOT") return GateKind::CNOT;
  if (name == "MULTIZ") return GateKind::MULTIZ;
  throw ArgumentError("unknown gate kind '" + std::string(name) + "'");
}

StateVector::StateVector(int num_qubits) : num_qubits_(num_qubits) {
  if (num_qubits < 1 || num_qubits > kMaxQubits) {
    throw CapacityError("qubit count " + std::to_string(num_qubits) +
                        " outside [1, " + std::to_string(kMaxQubits) + "]");
  }
  amps_.assign(std::size_t{1} << num_qubits, complex{0.0, 0.0});
  amps_[0] = 1.0;
}

double StateVector::norm_squared() const noexcept {
  double s = 0.0;
  for (const auto& a : amps_) s += std::norm(a);
  return s;
}

void StateVector::check_qubit(int q) const {
  if (q < 0 || q >= num_qubits_) {
    throw ArgumentError("qubit index " + std::to_string(q) + " out of range for " +
                        std::to_string(num_qubits_) + " qubits");
  }
}

void StateVector::apply_ry(int qubit, double angle) {
  check_qubit(qubit);
  const double c = std::cos(0.5 * angle);
  const double s = std::sin(0.5 * angle);
  const std::size_t stride = std::size_t{1} << qubit;
  const std::size_t n = amps_.size();
  for (std::size_t base = 0; base < n; base += 2 * stride) {
    for (std::size_t i = base; i < base + stride; ++i) {
      const complex a0 = amps_[i];
      const complex a1 = amps_[i + stride];
      amps_[i] = c * a0 - s * a1;
      amps_[i + stride] = s * a0 + c * a1;
    }
  }
}

void StateVector::apply_rz(int qubit, double angle) {
  check_qubit(qubit);
  const complex p0 = std::polar(1.0, -0.5 * angle);
  const complex p1 = std::conj(p0);
  const std::size_t mask = std::size_t{1} << qubit;
  for (std::size_t i = 0; i < amps_.size(); ++i) {
    amps_[i] *= (i & mask) ? p1 : p0;
  }
}

void StateVector::apply_cnot(int control, int target) {
  check_qubit(control);
  check_qubit(target);
  if (control == target) throw ArgumentError("CNOT control equals target");
  const std::size_t cmask = std::size_t{1} << control;
  const std::size_t tmask = std::size_t{1} << target;
  for (std::size_t i = 0; i < amps_.size(); ++i) {
    if ((i & cmask) && !(i & tmask)) std::swap(amps_[i], amps_[i | tmask]);
  }
}

void StateVector::apply_multiz(std::span<const int> qubits, double angle) {
  std::size_t mask = 0;
  for (int q : qubits) {
    check_qubit(q);
    mask |= std::size_t{1} << q;
  }
  // Z...Z eigenvalue is +1 on even parity, -1 on odd parity.
  const complex even = std::polar(1.0, -angle);
  const complex odd = std::conj(even);
  for (std::size_t i = 0; i < amps_.size(); ++i) {
    amps_[i] *= (std::popcount(i & mask) & 1) ? odd : even;
  }
}

void StateVector::apply_multiz_ladder(std::span<const int> qubits, double angle) {
  for (const auto& g : decompose_multiz({GateKind::MULTIZ, {qubits.begin(), qubits.end()}, angle})) {
    apply(g);
  }
}

void StateVector::apply(const BoundGate& gate) {
  validate_gate(gate, num_qubits_);
  apply_unchecked(gate);
}

void StateVector::apply_unchecked(const BoundGate& gate) {
  switch (gate.kind) {
    case GateKind::RY:
      apply_ry(gate.qubits[0], gate.angle);
      break;
    case GateKind::RZ:
      apply_rz(gate.qubits[0], gate.angle);
      break;
    case GateKind::CNOT:
      apply_cnot(gate.qubits[0], gate.qubits[1]);
      break;
    case GateKind::MULTIZ:
      apply_multiz(gate.qubits, gate.angle);
      break;
  }
}

double StateVector::expectation_z(int qubit) const {
  check_qubit(qubit);
  const std::size_t mask = std::size_t{1} << qubit;
  double e = 0.0;
  for (std::size_t i = 0; i < amps_.size(); ++i) {
    const double p = std::norm(amps_[i]);
    e += (i & mask) ? -p : p;
  }
  return std::clamp(e, -1.0, 1.0);
}

StateVector init_zero(int num_qubits) { return StateVector(num_qubits); }

void validate_gate(const BoundGate& gate, int num_qubits) {
  const auto& q = gate.qubits;
  for (int idx : q) {
    if (idx < 0 || idx >= num_qubits) {
      throw ArgumentError(std::string(gate_kind_name(gate.kind)) + " qubit index " +
                          std::to_string(idx) + " out of range for " +
                          std::to_string(num_qubits) + " qubits");
    }
  }
  if (!std::isfinite(gate.angle)) throw ArgumentError("non-finite gate angle");
  switch (gate.kind) {
    case GateKind::RY:
    case GateKind::RZ:
      if (q.size() != 1) throw ArgumentError("single-qubit rotation needs exactly 1 qubit");
      break;
    case GateKind::CNOT:
      if (q.size() != 2 || q[0] == q[1]) throw ArgumentError("CNOT needs 2 distinct qubits");
      break;
    case GateKind::MULTIZ: {
      if (q.empty() || static_cast<int>(q.size()) > num_qubits) {
        throw ArgumentError("MULTIZ needs between 1 and N qubits");
      }
      auto sorted = q;
      std::sort(sorted.begin(), sorted.end());
      if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw ArgumentError("MULTIZ qubits must be distinct");
      }
      break;
    }
  }
}

StateVector apply_gate(StateVector state, const BoundGate& gate) {
  state.apply(gate);
  return state;
}

StateVector run_circuit(StateVector state, std::span<const BoundGate> gates) {
  for (const auto& g : gates) state.apply(g);
  return state;
}

double expectation_z(const StateVector& state, int qubit) { return state.expectation_z(qubit); }

std::vector<BoundGate> decompose_multiz(const BoundGate& gate) {
  if (gate.kind != GateKind::MULTIZ) throw ArgumentError("decompose_multiz needs a MULTIZ gate");
  const auto& q = gate.qubits;
  std::vector<BoundGate> out;
  if (q.empty()) return out;
  // Parity accumulates onto the last qubit; exp(-i a Z..Z) = ladder . RZ(2a) . ladder^-1.
  for (std::size_t i = 0; i + 1 < q.size(); ++i) out.push_back({GateKind::CNOT, {q[i], q[i + 1]}, 0.0});
  out.push_back({GateKind::RZ, {q.back()}, 2.0 * gate.angle});
  for (std::size_t i = q.size() - 1; i-- > 0;) out.push_back({GateKind::CNOT, {q[i], q[i + 1]}, 0.0});
  return out;
}

}  // namespace qff
