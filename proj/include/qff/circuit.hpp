#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qff/statevec.hpp"

namespace qff {

enum class Entanglement { none, linear, circular, full };

const char* entanglement_name(Entanglement e);
Entanglement parse_entanglement(std::string_view name);

// Qubit pairs for an entanglement pattern, 0-based:
//   linear   {(j, j+1) | j < N-1}
//   circular {(j, (j+1) mod N) | j < N}, duplicates dropped for N <= 2
//   full     {(j, k) | j < k}
std::vector<std::pair<int, int>> pair_set(int num_qubits, Entanglement e);

// Width-3 sliding windows {(j, j+1, j+2)}: N-2 sets.
std::vector<std::vector<int>> sliding_triples(int num_qubits);

// Shared knobs of the encoding map and the trainable layers.
struct CouplingSpec {
  int num_qubits = 1;
  Entanglement entanglement = Entanglement::full;
  std::vector<std::vector<int>> degree_sets;  // higher-order Z-string terms

  std::vector<std::pair<int, int>> pairs() const { return pair_set(num_qubits, entanglement); }
  void validate() const;
  bool operator==(const CouplingSpec&) const = default;
};

struct EncodingSpec : CouplingSpec {};
struct AnsatzSpec : CouplingSpec {};

// Product of input features; the gate angle is prod_{j in indices} y_j.
struct InputExpr {
  std::vector<int> indices;
  double evaluate(std::span<const double> y) const;
  // d(angle)/d(y_j): product of the other factors (0 if j is absent).
  double partial(std::span<const double> y, int j) const;
  bool contains(int j) const;
  bool operator==(const InputExpr&) const = default;
};

struct ParamRef {
  int layer = 0;  // trainable layer index in [0, D]
  int slot = 0;   // position inside the layer
  int index = 0;  // global position in the parameter vector
  bool operator==(const ParamRef&) const = default;
};

enum class AngleSource { none, constant, input, param };

struct SymbolicGate {
  GateKind kind = GateKind::RY;
  std::vector<int> qubits;
  AngleSource source = AngleSource::none;
  double constant = 0.0;
  InputExpr input;
  ParamRef param;
  int stage = 0;  // 0 = U_0, then alternating Phi / U_l in circuit order
  bool operator==(const SymbolicGate&) const = default;
};

std::vector<SymbolicGate> feature_map(const EncodingSpec& spec);
std::vector<SymbolicGate> trainable_layer(const AnsatzSpec& spec, int layer);
// Number of parameters in layer l (l = 0 has single-qubit rotations only).
int layer_param_count(const AnsatzSpec& spec, int layer);

// Alternating re-uploading circuit U_0 Phi U_1 Phi ... Phi U_D (time order).
class QnnTemplate {
 public:
  QnnTemplate() = default;

  const EncodingSpec& encoding() const noexcept { return encoding_; }
  const AnsatzSpec& ansatz() const noexcept { return ansatz_; }
  int depth() const noexcept { return depth_; }
  int num_qubits() const noexcept { return encoding_.num_qubits; }
  int num_features() const noexcept { return encoding_.num_qubits; }
  int num_params() const noexcept { return static_cast<int>(param_gate_.size()); }
  const std::vector<SymbolicGate>& gates() const noexcept { return gates_; }

  // Gate index (into gates()) of each parameter.
  const std::vector<int>& param_gates() const noexcept { return param_gate_; }
  // Gate indices carrying an input expression, in circuit order.
  const std::vector<int>& encoding_gates() const noexcept { return encoding_gate_; }

  // Distinct input expressions of one encoding stage, in gate order.
  std::vector<InputExpr> encoding_features() const;

  std::string to_text() const;
  static QnnTemplate from_text(const std::string& text);

  friend QnnTemplate assemble_qnn(const EncodingSpec&, const AnsatzSpec&, int);

 private:
  EncodingSpec encoding_;
  AnsatzSpec ansatz_;
  int depth_ = 0;
  std::vector<SymbolicGate> gates_;
  std::vector<int> param_gate_;
  std::vector<int> encoding_gate_;
};

QnnTemplate assemble_qnn(const EncodingSpec& enc, const AnsatzSpec& ans, int depth);

std::vector<BoundGate> bind(const QnnTemplate& tmpl, std::span<const double> y,
                            std::span<const double> theta);

// Phi(y)^D with the trainable layers removed.
std::vector<BoundGate> bind_encoding_only(const QnnTemplate& tmpl, std::span<const double> y);

std::string format_degree_sets(const std::vector<std::vector<int>>& sets);
std::vector<std::vector<int>> parse_degree_sets(std::string_view text);

}  // namespace qff
