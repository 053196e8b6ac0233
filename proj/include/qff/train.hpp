#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qff/data.hpp"
#include "qff/model.hpp"

namespace qff {

struct LossSpec {
  double chi = 0.0;  // force weight
};

struct AdamConfig {
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int max_steps = 4000;
  double tolerance = 1e-6;  // relative loss improvement ...
  int patience = 50;        // ... over this many consecutive epochs
  bool stop_on_convergence = true;
  std::uint64_t seed = 0;

  void validate() const;
};

// Derivative-free local search (adaptive Nelder-Mead simplex).
struct SimplexConfig {
  int max_evaluations = 2000;
  double initial_step = 0.5;
  double tolerance = 1e-10;  // stop when the simplex f-spread and size fall below this
  std::uint64_t seed = 0;

  void validate() const;
};

struct OptimResult {
  std::vector<double> x;
  double value = 0.0;
  std::vector<double> trajectory;  // loss per step (ADAM) / best-so-far per iteration (simplex)
  int iterations = 0;
  int evaluations = 0;
  int epochs_to_convergence = -1;
  bool converged = false;
  bool budget_exhausted = false;
};

using Objective = std::function<double(std::span<const double>)>;
// Returns the value and writes the gradient into `grad`.
using ObjectiveWithGrad = std::function<double(std::span<const double>, std::span<double>)>;

OptimResult adam_minimize(const ObjectiveWithGrad& fn, std::vector<double> x0, const AdamConfig& cfg);
OptimResult simplex_minimize(const Objective& fn, std::vector<double> x0, const SimplexConfig& cfg);

// A scalar model f(theta; y) with the derivatives the loss needs.
class DifferentiableRegressor {
 public:
  virtual ~DifferentiableRegressor() = default;
  virtual int num_params() const = 0;
  virtual int num_inputs() const = 0;
  virtual double value(std::span<const double> theta, std::span<const double> y) const = 0;
  virtual std::vector<double> param_gradient(std::span<const double> theta, std::span<const double> y) const = 0;
  virtual std::vector<double> input_gradient(std::span<const double> theta, std::span<const double> y) const = 0;
  // d^2 f / d theta_mu d y_j, shape d x N.
  virtual std::vector<std::vector<double>> mixed_hessian(std::span<const double> theta,
                                                         std::span<const double> y) const = 0;
};

class QnnRegressor final : public DifferentiableRegressor {
 public:
  explicit QnnRegressor(const QnnTemplate& t) : tmpl_(&t) {}
  int num_params() const override { return tmpl_->num_params(); }
  int num_inputs() const override { return tmpl_->num_features(); }
  double value(std::span<const double> theta, std::span<const double> y) const override;
  std::vector<double> param_gradient(std::span<const double> theta, std::span<const double> y) const override;
  std::vector<double> input_gradient(std::span<const double> theta, std::span<const double> y) const override;
  std::vector<std::vector<double>> mixed_hessian(std::span<const double> theta,
                                                 std::span<const double> y) const override;

 private:
  const QnnTemplate* tmpl_;
};

// Dataset pushed through a fixed pipeline and label scaling; targets in
// scaled units (energy / s_E, force / s_E).
struct PreparedSet {
  std::vector<std::vector<double>> features;
  std::vector<PipelineJacobian> jacobians;
  std::vector<double> energy_targets;
  std::vector<std::vector<double>> force_targets;  // empty when the data has no forces
  int cartesian_dim = 0;

  std::size_t size() const noexcept { return features.size(); }
  bool has_forces() const noexcept { return !force_targets.empty(); }
};

PreparedSet prepare_set(const DescriptorPipeline& pipeline, const LabelScaler& labels, const Dataset& data,
                        bool with_jacobians);

struct LossBreakdown {
  double energy_mse = 0.0;
  double force_mse = 0.0;
  double total = 0.0;
};

LossBreakdown regression_loss(const DifferentiableRegressor& model, std::span<const double> theta,
                              const PreparedSet& set, const LossSpec& spec);
// Loss value plus its exact parameter gradient.
double regression_loss_gradient(const DifferentiableRegressor& model, std::span<const double> theta,
                                const PreparedSet& set, const LossSpec& spec, std::span<double> grad);

struct RmseReport {
  double energy = 0.0;         // eV
  double force = 0.0;          // eV/A (NaN when no force labels)
  double energy_scaled = 0.0;  // label-scaled units
  double force_scaled = 0.0;
  std::size_t samples = 0;
};

RmseReport regression_rmse(const DifferentiableRegressor& model, std::span<const double> theta,
                           const PreparedSet& set, const LabelScaler& labels, bool with_forces);

struct TrainReport {
  std::string optimizer;
  std::vector<std::pair<std::string, std::string>> settings;
  std::vector<double> loss;
  int epochs = 0;
  int epochs_to_convergence = -1;
  bool converged = false;
  bool budget_exhausted = false;
  int function_evaluations = 0;
  double final_loss = 0.0;
  RmseReport train;
  std::optional<RmseReport> validation;
  double wall_seconds = 0.0;
  std::uint64_t circuit_evaluations = 0;
  std::uint64_t param_shift_calls = 0;  // parameter-gradient evaluations during optimization
  std::uint64_t hessian_calls = 0;      // mixed-Hessian evaluations during optimization

  std::string to_text() const;
  std::string loss_curve_csv() const;
};

std::vector<double> zero_init(const QnnTemplate& tmpl);

double loss_chi(const QffModel& model, const Dataset& data, const LossSpec& spec);
RmseReport evaluate_rmse(const QffModel& model, const Dataset& data, bool with_forces);

// Builds a fresh model around `tmpl`: fits the pipeline scalers and label
// scaling on `train` and starts from zero_init.
QffModel initialize_model(const QnnTemplate& tmpl, DescriptorPipeline pipeline, const Dataset& train,
                          double label_headroom = 0.1);

std::pair<QffModel, TrainReport> adam_fit(QffModel model, const Dataset& train, const LossSpec& spec,
                                          const AdamConfig& cfg, const Dataset* validation = nullptr);
std::pair<QffModel, TrainReport> gradient_free_fit(QffModel model, const Dataset& train, const LossSpec& spec,
                                                   const SimplexConfig& cfg, const Dataset* validation = nullptr);

}  // namespace qff
