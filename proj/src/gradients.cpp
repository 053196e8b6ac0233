#include "qff/gradients.hpp"

#include <cmath>
#include <numbers>

#include "qff/errors.hpp"

namespace qff {

EvalStats& eval_stats() {
  static EvalStats stats;
  return stats;
}

double half_angle_factor(GateKind kind) { return kind == GateKind::MULTIZ ? 2.0 : 1.0; }

namespace {

constexpr double kQuarterTurn = std::numbers::pi / 2.0;

// Bound circuit that can be re-run with individual angles nudged.
class ShiftableCircuit {
 public:
  ShiftableCircuit(const QnnTemplate& t, std::span<const double> y, std::span<const double> theta)
      : num_qubits_(t.num_qubits()), gates_(bind(t, y, theta)) {
    for (const auto& g : gates_) validate_gate(g, num_qubits_);
  }

  double run() const {
    StateVector s(num_qubits_);
    for (const auto& g : gates_) s.apply_unchecked(g);
    eval_stats().circuit_runs.fetch_add(1, std::memory_order_relaxed);
    return s.expectation_z(0);
  }

  // Shift the half-angle-normalized angle of gate i by `half_shift`.
  void shift(int i, double half_shift) {
    gates_[i].angle += half_shift / half_angle_factor(gates_[i].kind);
  }
  void set_angle(int i, double angle) { gates_[i].angle = angle; }
  double angle(int i) const { return gates_[i].angle; }
  double factor(int i) const { return half_angle_factor(gates_[i].kind); }

  // df/d(angle_i) = c/2 [f(+pi/2) - f(-pi/2)] in normalized units.
  double derivative(int i) {
    const double a = angle(i);
    shift(i, kQuarterTurn);
    const double plus = run();
    set_angle(i, a);
    shift(i, -kQuarterTurn);
    const double minus = run();
    set_angle(i, a);
    return 0.5 * factor(i) * (plus - minus);
  }

  // d^2 f / d(angle_a) d(angle_b) for two distinct gates.
  double second_derivative(int a, int b) {
    const double aa = angle(a);
    const double ab = angle(b);
    double acc = 0.0;
    for (int sa : {1, -1}) {
      for (int sb : {1, -1}) {
        set_angle(a, aa);
        set_angle(b, ab);
        shift(a, sa * kQuarterTurn);
        shift(b, sb * kQuarterTurn);
        acc += sa * sb * run();
      }
    }
    set_angle(a, aa);
    set_angle(b, ab);
    return 0.25 * factor(a) * factor(b) * acc;
  }

 private:
  int num_qubits_;
  std::vector<BoundGate> gates_;
};

}  // namespace

double eval_qnn(const QnnTemplate& t, std::span<const double> y, std::span<const double> theta) {
  return ShiftableCircuit(t, y, theta).run();
}

std::vector<double> grad_params(const QnnTemplate& t, std::span<const double> y,
                                std::span<const double> theta) {
  eval_stats().param_shift_calls.fetch_add(1, std::memory_order_relaxed);
  ShiftableCircuit c(t, y, theta);
  std::vector<double> g(t.num_params());
  for (int p = 0; p < t.num_params(); ++p) g[p] = c.derivative(t.param_gates()[p]);
  return g;
}

std::vector<double> grad_inputs(const QnnTemplate& t, std::span<const double> y,
                                std::span<const double> theta) {
  eval_stats().input_shift_calls.fetch_add(1, std::memory_order_relaxed);
  ShiftableCircuit c(t, y, theta);
  std::vector<double> g(t.num_features(), 0.0);
  for (int gi : t.encoding_gates()) {
    const auto& expr = t.gates()[gi].input;
    bool any = false;
    for (int j : expr.indices) any = any || expr.partial(y, j) != 0.0;
    if (!any) continue;
    const double d = c.derivative(gi);
    for (int j = 0; j < t.num_features(); ++j) {
      if (expr.contains(j)) g[j] += expr.partial(y, j) * d;
    }
  }
  return g;
}

namespace {

std::vector<std::vector<double>> mixed_exact(const QnnTemplate& t, std::span<const double> y,
                                             std::span<const double> theta) {
  ShiftableCircuit c(t, y, theta);
  const int n = t.num_features();
  std::vector<std::vector<double>> h(t.num_params(), std::vector<double>(n, 0.0));
  for (int p = 0; p < t.num_params(); ++p) {
    const int pg = t.param_gates()[p];
    for (int gi : t.encoding_gates()) {
      const auto& expr = t.gates()[gi].input;
      std::vector<double> coeff(n, 0.0);
      bool any = false;
      for (int j : expr.indices) {
        coeff[j] = expr.partial(y, j);
        any = any || coeff[j] != 0.0;
      }
      if (!any) continue;
      const double d2 = c.second_derivative(pg, gi);
      for (int j = 0; j < n; ++j) h[p][j] += coeff[j] * d2;
    }
  }
  return h;
}

std::vector<std::vector<double>> mixed_literal(const QnnTemplate& t, std::span<const double> y,
                                               std::span<const double> theta) {
  const int n = t.num_features();
  std::vector<std::vector<double>> h(t.num_params(), std::vector<double>(n, 0.0));
  std::vector<double> ys(y.begin(), y.end());
  for (int j = 0; j < n; ++j) {
    for (int sy : {1, -1}) {
      ys[j] = y[j] + sy * kQuarterTurn;
      ShiftableCircuit c(t, ys, theta);
      for (int p = 0; p < t.num_params(); ++p) {
        const int pg = t.param_gates()[p];
        // c.derivative already carries the 1/2 and factor of the parameter.
        h[p][j] += 0.5 * sy * c.derivative(pg);
      }
    }
    ys[j] = y[j];
  }
  return h;
}

}  // namespace

std::vector<std::vector<double>> mixed_hessian(const QnnTemplate& t, std::span<const double> y,
                                               std::span<const double> theta, HessianMode mode) {
  eval_stats().hessian_calls.fetch_add(1, std::memory_order_relaxed);
  return mode == HessianMode::exact ? mixed_exact(t, y, theta) : mixed_literal(t, y, theta);
}

GradientReport gradient_report(const QnnTemplate& t, std::span<const double> y,
                               std::span<const double> theta, bool with_mixed) {
  GradientReport r;
  r.value = eval_qnn(t, y, theta);
  r.d_params = grad_params(t, y, theta);
  r.d_inputs = grad_inputs(t, y, theta);
  if (with_mixed) r.mixed = mixed_hessian(t, y, theta);
  for (double v : r.d_params)
    if (!std::isfinite(v)) throw NumericalError("non-finite parameter gradient");
  for (double v : r.d_inputs)
    if (!std::isfinite(v)) throw NumericalError("non-finite input gradient");
  return r;
}

}  // namespace qff
