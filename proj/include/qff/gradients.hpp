#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "qff/circuit.hpp"

namespace qff {

// Process-wide evaluation counters, for cost accounting in reports and tests.
struct EvalStats {
  std::atomic<std::uint64_t> circuit_runs{0};
  std::atomic<std::uint64_t> param_shift_calls{0};  // grad_params
  std::atomic<std::uint64_t> input_shift_calls{0};  // grad_inputs
  std::atomic<std::uint64_t> hessian_calls{0};      // mixed_hessian

  void reset() {
    circuit_runs = 0;
    param_shift_calls = 0;
    input_shift_calls = 0;
    hessian_calls = 0;
  }
};

EvalStats& eval_stats();

struct GradientReport {
  double value = 0.0;
  std::vector<double> d_params;                           // length d
  std::vector<double> d_inputs;                           // length N
  std::optional<std::vector<std::vector<double>>> mixed;  // d x N
};

enum class HessianMode {
  exact,                // per-occurrence nested shifts with chain coefficients
  literal_input_shift,  // shifts y_j by +-pi/2 directly (ignores re-uploading)
};

// <0| M^dag Z_0 M |0> of the bound circuit.
double eval_qnn(const QnnTemplate& tmpl, std::span<const double> y, std::span<const double> theta);

// Parameter-shift gradient; exactly 2d circuit runs.
std::vector<double> grad_params(const QnnTemplate& tmpl, std::span<const double> y,
                                std::span<const double> theta);

// Input gradient, summing the shift-rule derivative of every encoding
// occurrence times d(angle)/d(y_j).
std::vector<double> grad_inputs(const QnnTemplate& tmpl, std::span<const double> y,
                                std::span<const double> theta);

// d^2 f / (d theta_mu d y_j), shape d x N.
std::vector<std::vector<double>> mixed_hessian(const QnnTemplate& tmpl, std::span<const double> y,
                                               std::span<const double> theta,
                                               HessianMode mode = HessianMode::exact);

GradientReport gradient_report(const QnnTemplate& tmpl, std::span<const double> y,
                               std::span<const double> theta, bool with_mixed = false);

// Factor c such that a gate exp(-i phi P) or exp(-i phi P / 2) equals
// exp(-i (c phi) P / 2): 1 for RY/RZ, 2 for MULTIZ.
double half_angle_factor(GateKind kind);

}  // namespace qff
