#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qff/circuit.hpp"
#include "qff/data.hpp"
#include "qff/model.hpp"
#include "qff/train.hpp"

namespace qff {

// Fully connected tanh network; widths run input -> hidden... -> 1 and the
// output unit is linear.
struct MlpSpec {
  std::vector<int> widths;
  std::uint64_t seed = 0;

  int num_params() const;  // sum of w_in * w_out + w_out
  int input_width() const { return widths.empty() ? 0 : widths.front(); }
  void validate() const;
  std::string to_string() const;  // "[7,4,5,2,1]"
  static MlpSpec parse(std::string_view s);
};

// Parameters are flattened layer by layer: W (row-major, out x in), then b.
struct MlpModel {
  MlpSpec spec;
  std::vector<double> params;
  int num_params() const { return static_cast<int>(params.size()); }
};

MlpModel mlp_init_xavier(const MlpSpec& spec);

struct MlpGradients {
  double value = 0.0;
  std::vector<double> d_params;
  std::vector<double> d_inputs;
};

double mlp_forward(const MlpModel& model, std::span<const double> x);
MlpGradients mlp_backward(const MlpModel& model, std::span<const double> x);
// d^2 f / d theta d x_j, shape d x width_in; exact (dual-number forward over reverse).
std::vector<std::vector<double>> mlp_mixed_hessian(const MlpModel& model, std::span<const double> x);

// Lower is better.
using TopologyScore = std::function<double(const MlpSpec&)>;

// All hidden-layer configurations (up to `max_hidden` layers) whose parameter
// count lies within budget +- tolerance.
std::vector<MlpSpec> feasible_topologies(int budget, int input_width, int tolerance = 2, int max_hidden = 4);
// Samples `trials` feasible topologies and returns the best-scoring one
// (the first sample when no score is given). Throws ArgumentError when none exist.
MlpSpec topology_search(int budget, int input_width, int trials, std::uint64_t seed,
                        const TopologyScore& score = {}, int tolerance = 2);

// MLP evaluated on the expanded encoding features z(y) (the input products of
// one encoding stage), so it sees the same inputs as the QNN feature map.
class MlpRegressor final : public DifferentiableRegressor {
 public:
  MlpRegressor(MlpSpec spec, std::vector<InputExpr> expansion);
  int num_params() const override { return spec_.num_params(); }
  int num_inputs() const override { return num_inputs_; }
  double value(std::span<const double> theta, std::span<const double> y) const override;
  std::vector<double> param_gradient(std::span<const double> theta, std::span<const double> y) const override;
  std::vector<double> input_gradient(std::span<const double> theta, std::span<const double> y) const override;
  std::vector<std::vector<double>> mixed_hessian(std::span<const double> theta,
                                                 std::span<const double> y) const override;

  std::vector<double> expand(std::span<const double> y) const;

 private:
  MlpSpec spec_;
  std::vector<InputExpr> expansion_;
  int num_inputs_ = 0;
};

struct MlpForceField {
  MlpModel mlp;
  std::vector<InputExpr> expansion;
  DescriptorPipeline pipeline;
  LabelScaler labels;
  std::map<std::string, std::string> metadata;

  MlpRegressor regressor() const { return MlpRegressor(mlp.spec, expansion); }
  void validate() const;
};

Prediction predict(const MlpForceField& model, const MoleculeGeometry& geom, bool with_forces = true);
RmseReport evaluate_rmse(const MlpForceField& model, const Dataset& data, bool with_forces);

MlpForceField initialize_mlp(const MlpSpec& spec, std::vector<InputExpr> expansion, DescriptorPipeline pipeline,
                             const Dataset& train, double label_headroom = 0.1);
std::pair<MlpForceField, TrainReport> mlp_adam_fit(MlpForceField model, const Dataset& train, const LossSpec& spec,
                                                   const AdamConfig& cfg, const Dataset* validation = nullptr);

std::string mlp_to_text(const MlpForceField& model);
MlpForceField mlp_from_text(const std::string& content);
void save_mlp_checkpoint(const MlpForceField& model, const std::string& path);
MlpForceField load_mlp_checkpoint(const std::string& path);

}  // namespace qff
