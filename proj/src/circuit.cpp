#include "qff/circuit.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "qff/errors.hpp"
#include "qff/textio.hpp"

namespace qff {

const char* entanglement_name(Entanglement e) {
  switch (e) {
    case Entanglement::none:
      return "none";
    case Entanglement::linear:
      return "linear";
    case Entanglement::circular:
      return "circular";
    case Entanglement::full:
      return "full";
  }
  return "?";
}

Entanglement parse_entanglement(std::string_view name) {
  if (name == "none") return Entanglement::none;
  if (name == "linear") return Entanglement::linear;
  if (name == "circular") return Entanglement::circular;
  if (name == "full") return Entanglement::full;
  throw ArgumentError("unknown entanglement pattern '" + std::string(name) + "'");
}

std::vector<std::pair<int, int>> pair_set(int n, Entanglement e) {
  std::vector<std::pair<int, int>> out;
  switch (e) {
    case Entanglement::none:
      break;
    case Entanglement::linear:
      for (int j = 0; j + 1 < n; ++j) out.emplace_back(j, j + 1);
      break;
    case Entanglement::circular:
      if (n == 2) {
        out.emplace_back(0, 1);
      } else if (n > 2) {
        for (int j = 0; j < n; ++j) out.emplace_back(j, (j + 1) % n);
      }
      break;
    case Entanglement::full:
      for (int j = 0; j < n; ++j)
        for (int k = j + 1; k < n; ++k) out.emplace_back(j, k);
      break;
  }
  return out;
}

std::vector<std::vector<int>> sliding_triples(int n) {
  std::vector<std::vector<int>> out;
  for (int j = 0; j + 2 < n; ++j) out.push_back({j, j + 1, j + 2});
  return out;
}

void CouplingSpec::validate() const {
  if (num_qubits < 1) throw ArgumentError("coupling spec needs at least one qubit");
  for (const auto& set : degree_sets) {
    if (set.empty()) throw ArgumentError("empty degree set");
    std::set<int> seen;
    for (int q : set) {
      if (q < 0 || q >= num_qubits) {
        throw ArgumentError("degree set references qubit " + std::to_string(q) + " but N = " +
                            std::to_string(num_qubits));
      }
      if (!seen.insert(q).second) throw ArgumentError("degree set has repeated qubit");
    }
  }
}

double InputExpr::evaluate(std::span<const double> y) const {
  double v = 1.0;
  for (int j : indices) v *= y[j];
  return v;
}

double InputExpr::partial(std::span<const double> y, int j) const {
  if (!contains(j)) return 0.0;
  double v = 1.0;
  bool skipped = false;
  for (int k : indices) {
    if (k == j && !skipped) {
      skipped = true;
      continue;
    }
    v *= y[k];
  }
  return v;
}

bool InputExpr::contains(int j) const {
  return std::find(indices.begin(), indices.end(), j) != indices.end();
}

std::vector<SymbolicGate> feature_map(const EncodingSpec& spec) {
  spec.validate();
  std::vector<SymbolicGate> out;
  auto input_gate = [](GateKind kind, std::vector<int> qubits) {
    SymbolicGate g;
    g.kind = kind;
    g.source = AngleSource::input;
    g.input.indices = qubits;
    g.qubits = std::move(qubits);
    return g;
  };
  // S(y): RY angle y_j realizes exp(-i y_j Y / 2).
  for (int j = 0; j < spec.num_qubits; ++j) out.push_back(input_gate(GateKind::RY, {j}));
  for (auto [j, k] : spec.pairs()) out.push_back(input_gate(GateKind::MULTIZ, {j, k}));
  for (const auto& set : spec.degree_sets) out.push_back(input_gate(GateKind::MULTIZ, set));
  return out;
}

int layer_param_count(const AnsatzSpec& spec, int layer) {
  if (layer == 0) return spec.num_qubits;
  return spec.num_qubits + static_cast<int>(spec.pairs().size() + spec.degree_sets.size());
}

std::vector<SymbolicGate> trainable_layer(const AnsatzSpec& spec, int layer) {
  spec.validate();
  if (layer < 0) throw ArgumentError("negative layer index");
  std::vector<SymbolicGate> out;
  int slot = 0;
  auto param_gate = [&](GateKind kind, std::vector<int> qubits) {
    SymbolicGate g;
    g.kind = kind;
    g.qubits = std::move(qubits);
    g.source = AngleSource::param;
    g.param = {layer, slot++, 0};
    return g;
  };
  for (int j = 0; j < spec.num_qubits; ++j) out.push_back(param_gate(GateKind::RY, {j}));
  if (layer == 0) return out;
  for (auto [j, k] : spec.pairs()) out.push_back(param_gate(GateKind::MULTIZ, {j, k}));
  for (const auto& set : spec.degree_sets) out.push_back(param_gate(GateKind::MULTIZ, set));
  return out;
}

QnnTemplate assemble_qnn(const EncodingSpec& enc, const AnsatzSpec& ans, int depth) {
  if (enc.num_qubits != ans.num_qubits) {
    throw ArgumentError("encoding has " + std::to_string(enc.num_qubits) +
                        " qubits but ansatz has " + std::to_string(ans.num_qubits));
  }
  if (depth < 1) throw ArgumentError("depth must be >= 1");
  enc.validate();
  ans.validate();

  QnnTemplate t;
  t.encoding_ = enc;
  t.ansatz_ = ans;
  t.depth_ = depth;

  const auto phi = feature_map(enc);
  int stage = 0;
  auto append_layer = [&](int layer) {
    for (auto g : trainable_layer(ans, layer)) {
      g.param.index = static_cast<int>(t.param_gate_.size());
      g.stage = stage;
      t.param_gate_.push_back(static_cast<int>(t.gates_.size()));
      t.gates_.push_back(std::move(g));
    }
    ++stage;
  };
  append_layer(0);
  for (int l = 1; l <= depth; ++l) {
    for (auto g : phi) {
      g.stage = stage;
      t.encoding_gate_.push_back(static_cast<int>(t.gates_.size()));
      t.gates_.push_back(std::move(g));
    }
    ++stage;
    append_layer(l);
  }
  return t;
}

std::vector<InputExpr> QnnTemplate::encoding_features() const {
  std::vector<InputExpr> out;
  for (const auto& g : feature_map(encoding_)) out.push_back(g.input);
  return out;
}

namespace {

BoundGate bind_gate(const SymbolicGate& g, std::span<const double> y, std::span<const double> theta) {
  BoundGate b{g.kind, g.qubits, 0.0};
  switch (g.source) {
    case AngleSource::none:
      break;
    case AngleSource::constant:
      b.angle = g.constant;
      break;
    case AngleSource::input:
      b.angle = g.input.evaluate(y);
      break;
    case AngleSource::param:
      b.angle = theta[g.param.index];
      break;
  }
  return b;
}

void check_dims(const QnnTemplate& t, std::span<const double> y, std::span<const double> theta) {
  if (static_cast<int>(y.size()) != t.num_features()) {
    throw ArgumentError("input has " + std::to_string(y.size()) + " features, template expects " +
                        std::to_string(t.num_features()));
  }
  if (static_cast<int>(theta.size()) != t.num_params()) {
    throw ArgumentError("parameter vector has " + std::to_string(theta.size()) +
                        " entries, template expects " + std::to_string(t.num_params()));
  }
}

}  // namespace

std::vector<BoundGate> bind(const QnnTemplate& t, std::span<const double> y,
                            std::span<const double> theta) {
  check_dims(t, y, theta);
  std::vector<BoundGate> out;
  out.reserve(t.gates().size());
  for (const auto& g : t.gates()) out.push_back(bind_gate(g, y, theta));
  return out;
}

std::vector<BoundGate> bind_encoding_only(const QnnTemplate& t, std::span<const double> y) {
  if (static_cast<int>(y.size()) != t.num_features()) throw ArgumentError("input dimension mismatch");
  std::vector<BoundGate> out;
  for (int idx : t.encoding_gates()) out.push_back(bind_gate(t.gates()[idx], y, {}));
  return out;
}

std::string format_degree_sets(const std::vector<std::vector<int>>& sets) {
  std::string out;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    if (i) out += ' ';
    for (std::size_t k = 0; k < sets[i].size(); ++k) {
      if (k) out += ',';
      out += std::to_string(sets[i][k]);
    }
  }
  return out;
}

std::vector<std::vector<int>> parse_degree_sets(std::string_view s) {
  std::vector<std::vector<int>> out;
  for (const auto& tok : text::split_ws(s)) out.push_back(text::parse_ints(tok, ','));
  return out;
}

namespace {

std::string gate_line(const SymbolicGate& g) {
  std::ostringstream os;
  os << gate_kind_name(g.kind) << " q=";
  for (std::size_t i = 0; i < g.qubits.size(); ++i) os << (i ? "," : "") << g.qubits[i];
  switch (g.source) {
    case AngleSource::none:
      break;
    case AngleSource::constant:
      os << " const=" << text::format_double(g.constant);
      break;
    case AngleSource::input:
      os << " input=";
      for (std::size_t i = 0; i < g.input.indices.size(); ++i) os << (i ? "," : "") << g.input.indices[i];
      break;
    case AngleSource::param:
      os << " param=" << g.param.index << " layer=" << g.param.layer << " slot=" << g.param.slot;
      break;
  }
  os << " stage=" << g.stage;
  return os.str();
}

}  // namespace

std::string QnnTemplate::to_text() const {
  std::ostringstream os;
  os << "template.qubits = " << num_qubits() << '\n';
  os << "template.depth = " << depth_ << '\n';
  os << "template.encoding.entanglement = " << entanglement_name(encoding_.entanglement) << '\n';
  os << "template.encoding.degree_sets = " << format_degree_sets(encoding_.degree_sets) << '\n';
  os << "template.ansatz.entanglement = " << entanglement_name(ansatz_.entanglement) << '\n';
  os << "template.ansatz.degree_sets = " << format_degree_sets(ansatz_.degree_sets) << '\n';
  os << "template.params = " << num_params() << '\n';
  os << "template.gate_count = " << gates_.size() << '\n';
  for (const auto& g : gates_) os << "template.gate = " << gate_line(g) << '\n';
  return os.str();
}

QnnTemplate QnnTemplate::from_text(const std::string& body) {
  const auto doc = text::KeyValueDoc::parse(body);
  auto int_field = [&](std::string_view key) {
    const auto& e = doc.get(key);
    return static_cast<int>(text::parse_int(e.value, e.line));
  };
  auto coupling = [&](std::string_view prefix, CouplingSpec& spec) {
    const std::string p(prefix);
    const auto& ent = doc.get(p + ".entanglement");
    try {
      spec.entanglement = parse_entanglement(ent.value);
      spec.degree_sets = parse_degree_sets(doc.get(p + ".degree_sets").value);
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(e.what(), ent.line);
    }
  };
  EncodingSpec enc;
  AnsatzSpec ans;
  enc.num_qubits = ans.num_qubits = int_field("template.qubits");
  coupling("template.encoding", enc);
  coupling("template.ansatz", ans);
  const int depth = int_field("template.depth");

  QnnTemplate t;
  try {
    t = assemble_qnn(enc, ans, depth);
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(std::string("invalid template: ") + e.what(), doc.get("template.depth").line);
  }
  if (int_field("template.params") != t.num_params()) {
    throw ParseError("parameter count does not match template structure", doc.get("template.params").line);
  }
  const auto gate_entries = doc.all("template.gate");
  if (int_field("template.gate_count") != static_cast<int>(gate_entries.size()) ||
      gate_entries.size() != t.gates().size()) {
    throw ParseError("gate list length does not match template structure", doc.last_line());
  }
  for (std::size_t i = 0; i < gate_entries.size(); ++i) {
    if (gate_entries[i]->value != gate_line(t.gates()[i])) {
      throw ParseError("gate " + std::to_string(i) + " does not match template structure",
                       gate_entries[i]->line);
    }
  }
  return t;
}

}  // namespace qff
