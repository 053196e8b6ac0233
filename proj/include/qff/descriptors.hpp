#pragma once

#include <Eigen/Core>
#include <array>
#include <atomic>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace qff {

// Cartesian geometry in Angstrom, flattened as (x0, y0, z0, x1, ...).
struct MoleculeGeometry {
  std::vector<std::string> elements;
  std::vector<double> cartesian;

  int num_atoms() const noexcept { return static_cast<int>(cartesian.size() / 3); }
  Eigen::Vector3d atom(int i) const;
  // n >= 2, finite, matching label count, no coincident atoms.
  void validate() const;
};

// Scalar internal coordinate with its gradient w.r.t. all 3n Cartesians.
struct CoordValue {
  double value = 0.0;
  Eigen::VectorXd gradient;
};

CoordValue bond_length(const MoleculeGeometry& g, int i, int j);
// Angle at vertex j, in [0, pi].
CoordValue bond_angle(const MoleculeGeometry& g, int i, int j, int k);
// d = sign(chi) arccos(n1.n2 / |n1||n2|), n1 = r_ij x r_kj, n2 = r_kj x r_kl,
// chi = r_kj . (n1 x n2), r_ab = r_a - r_b; sign(0) = +1, so d lies in (-pi, pi].
CoordValue dihedral(const MoleculeGeometry& g, int i, int j, int k, int l);

// Counts of clamped arcsin/arccos arguments and near-collinear bond angles.
struct DescriptorDiagnostics {
  std::atomic<std::uint64_t> clamped_inputs{0};
  std::atomic<std::uint64_t> near_singular_angles{0};
};
DescriptorDiagnostics& descriptor_diagnostics();

enum class CoordKind { bond, angle, dihedral };

struct InternalCoordinate {
  CoordKind kind = CoordKind::bond;
  std::vector<int> atoms;  // 2, 3 or 4 indices

  static InternalCoordinate bond(int i, int j) { return {CoordKind::bond, {i, j}}; }
  static InternalCoordinate angle(int i, int j, int k) { return {CoordKind::angle, {i, j, k}}; }
  static InternalCoordinate torsion(int i, int j, int k, int l) {
    return {CoordKind::dihedral, {i, j, k, l}};
  }

  CoordValue evaluate(const MoleculeGeometry& g) const;
  void validate(int num_atoms) const;
  std::string to_string() const;
  static InternalCoordinate parse(std::string_view s);
  bool operator==(const InternalCoordinate&) const = default;
};

// Affine map [min, max] -> [-1, 1].
struct MinMaxScaler {
  double min = -1.0;
  double max = 1.0;

  static MinMaxScaler fit(std::span<const double> values);
  double apply(double x) const { return 2.0 * (x - min) / (max - min) - 1.0; }
  double derivative() const { return 2.0 / (max - min); }
};

enum class Nonlinearity { pi_scale, arcsin, arccos, identity };

const char* nonlinearity_name(Nonlinearity n);
Nonlinearity parse_nonlinearity(std::string_view s);

// Arguments of arcsin/arccos are clamped to [-1 + eps, 1 - eps].
inline constexpr double kArcClampEps = 1e-6;

struct FeatureDef {
  int coord = 0;
  Nonlinearity nonlinearity = Nonlinearity::identity;
  bool operator==(const FeatureDef&) const = default;
};

using PipelineJacobian = Eigen::MatrixXd;  // N x 3n

struct PipelineOutput {
  std::vector<double> features;
  PipelineJacobian jacobian;
};

// Cartesian -> internal coordinates -> min-max scaling -> per-feature nonlinearity.
class DescriptorPipeline {
 public:
  DescriptorPipeline() = default;
  DescriptorPipeline(int num_atoms, std::vector<InternalCoordinate> coords,
                     std::vector<FeatureDef> features);

  int num_atoms() const noexcept { return num_atoms_; }
  int num_features() const noexcept { return static_cast<int>(features_.size()); }
  int num_coords() const noexcept { return static_cast<int>(coords_.size()); }
  const std::vector<InternalCoordinate>& coords() const noexcept { return coords_; }
  const std::vector<FeatureDef>& features() const noexcept { return features_; }
  const std::vector<MinMaxScaler>& scalers() const noexcept { return scalers_; }
  bool fitted() const noexcept { return !scalers_.empty(); }

  void fit(std::span<const MoleculeGeometry> training);
  void set_scalers(std::vector<MinMaxScaler> s);

  std::vector<double> internal_coordinates(const MoleculeGeometry& g) const;
  std::vector<double> apply(const MoleculeGeometry& g) const;
  PipelineJacobian jacobian(const MoleculeGeometry& g) const;
  PipelineOutput evaluate(const MoleculeGeometry& g, bool with_jacobian = true) const;

  std::string to_text() const;
  static DescriptorPipeline from_text(const std::string& text);

 private:
  void require_fitted() const;

  int num_atoms_ = 0;
  std::vector<InternalCoordinate> coords_;
  std::vector<FeatureDef> features_;
  std::vector<MinMaxScaler> scalers_;
};

}  // namespace qff
