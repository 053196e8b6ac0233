#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qff/descriptors.hpp"

namespace qff {

struct Sample {
  std::vector<double> cartesian;              // A, length 3n
  double energy = 0.0;                        // eV
  std::optional<std::vector<double>> forces;  // eV/A, length 3n
};

struct Dataset {
  std::vector<std::string> elements;
  std::vector<Sample> samples;
  std::string preset;
  std::string provenance;

  int num_atoms() const noexcept { return static_cast<int>(elements.size()); }
  std::size_t size() const noexcept { return samples.size(); }
  bool has_forces() const;
  MoleculeGeometry geometry(std::size_t i) const { return {elements, samples.at(i).cartesian}; }
  std::vector<MoleculeGeometry> geometries() const;
  std::vector<double> energies() const;
  void validate() const;
};

struct EnergyForces {
  double energy = 0.0;
  std::vector<double> forces;
};

using EnergyFn = std::function<double(const MoleculeGeometry&)>;

// V = D_e (1 - exp(-a (r - r_e)))^2.
struct MorseParams {
  double well_depth = 2.515;  // eV
  double alpha = 1.128;       // 1/A
  double r_eq = 1.5957;       // A
};

struct MorseValue {
  double energy = 0.0;
  double force = 0.0;  // -dV/dr
};

MorseValue morse_oracle(double r, const MorseParams& p);
// Morse potential on the bond between atoms 0 and 1 of a diatomic geometry.
EnergyForces morse_geometry(const MoleculeGeometry& geom, const MorseParams& p);

// Sum of harmonic bond and angle terms plus optional double-well dihedrals
// h ((d / d0)^2 - 1)^2.
struct ValenceOracle {
  struct Bond {
    int i, j;
    double k, r0;
  };
  struct Angle {
    int i, j, k;
    double k_theta, theta0;
  };
  struct DoubleWell {
    int i, j, k, l;
    double barrier, d0;
  };
  std::vector<Bond> bonds;
  std::vector<Angle> angles;
  std::vector<DoubleWell> dihedrals;

  EnergyForces evaluate(const MoleculeGeometry& geom) const;
};

struct TriatomicParams {
  double k_bond = 45.0;           // eV/A^2
  double r_eq = 0.9572;           // A
  double k_angle = 4.0;           // eV/rad^2
  double theta_eq = 1.8242181;    // rad (104.52 deg)
};

// Harmonic water-like surrogate: atom 0 is the centre, bonds (0,1), (0,2), angle 1-0-2.
EnergyForces triatomic_oracle(const MoleculeGeometry& geom, const TriatomicParams& p);

// Central differences per Cartesian component; F = -dE/dc.
std::vector<double> finite_difference_forces(const EnergyFn& energy, const MoleculeGeometry& geom,
                                             double h);

// Bond length |C_1 - C_0| of a diatomic sample.
double bond_coordinate(const Sample& s);
// Reflects a diatomic sample to bond length 2 r_m - r along the same axis,
// keeping the energy and flipping the force sign.
Sample mirror_sample(const Sample& s, double mirror_point);
Dataset mirror_augment(const Dataset& data, double mirror_point);

std::string dataset_to_text(const Dataset& data);
Dataset dataset_from_text(const std::string& content);
void save_dataset(const Dataset& data, const std::string& path);
Dataset load_dataset(const std::string& path);

// Converter for external ab initio dumps in extended-XYZ style:
//   <natoms>
//   energy=<eV> [anything else]
//   <El> x y z [fx fy fz]      (natoms lines)
// repeated per frame.
Dataset convert_xyz_dump(const std::string& content);

std::pair<Dataset, Dataset> train_test_split(const Dataset& data, std::size_t n_train, std::uint64_t seed);

// Seeded Fisher-Yates permutation of 0..n-1, identical on every platform.
std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed);

}  // namespace qff
