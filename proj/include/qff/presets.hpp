#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qff/circuit.hpp"
#include "qff/data.hpp"
#include "qff/descriptors.hpp"

namespace qff {

// Experiment configuration for one molecule: geometry description, circuit
// layout, training budget and the analytic surrogate that labels data.
struct Preset {
  std::string name;
  std::vector<std::string> elements;
  std::vector<InternalCoordinate> coords;
  std::vector<FeatureDef> features;
  EncodingSpec encoding;
  AnsatzSpec ansatz;
  int depth = 1;

  double chi = 0.0;
  std::string optimizer = "adam";  // adam | simplex
  int steps = 4000;                // ADAM steps or simplex evaluations
  double learning_rate = 0.01;
  std::size_t train_size = 50;
  std::size_t test_size = 120;

  bool mirror = false;
  double mirror_point = 0.0;     // A
  double range_min = 0.0;        // bond sweep for diatomics, A
  double range_max = 0.0;

  DescriptorPipeline make_pipeline() const;
  QnnTemplate make_template() const;
  int num_params() const { return make_template().num_params(); }
};

std::vector<std::string> preset_names();
Preset get_preset(std::string_view name);  // ArgumentError for unknown names

struct GenOptions {
  std::size_t count = 0;  // 0 = train_size + test_size
  std::uint64_t seed = 0;
  bool mirror = false;
  bool fd_forces = false;  // label forces by central differences instead of analytically
  double fd_step = 1e-4;
  std::optional<std::pair<double, double>> range;        // diatomic sweep override, A
  std::optional<std::pair<double, double>> bond_filter;  // drop samples with any bond outside, A
};

EnergyForces preset_oracle(const Preset& preset, const MoleculeGeometry& geom);
Dataset generate_dataset(const Preset& preset, const GenOptions& opt);

// Surrogate parameters used by the polyatomic presets.
ValenceOracle hydronium_oracle();

}  // namespace qff
