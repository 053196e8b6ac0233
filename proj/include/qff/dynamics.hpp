#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "qff/circuit.hpp"
#include "qff/data.hpp"
#include "qff/model.hpp"

namespace qff {

// Units: A, eV, amu, fs.
inline constexpr double kForceToAccel = 0.0096485332;   // (eV/A)/amu -> A/fs^2
inline constexpr double kKineticToEv = 103.642696;       // amu A^2/fs^2 -> eV

// Energy (eV) and forces (eV/A per degree of freedom) at a flat position vector.
using ForceProvider = std::function<EnergyForces(std::span<const double> positions)>;

struct MdConfig {
  double dt = 0.1;  // fs
  int steps = 1000;
  std::vector<double> masses;  // amu, one per atom
  int dof_per_atom = 3;        // 1 for a reduced bond coordinate
  std::vector<double> positions;
  std::vector<double> velocities;  // A/fs; zeros when empty
  int record_every = 1;

  void validate() const;
};

struct Trajectory {
  double dt = 0.0;  // fs between recorded frames
  std::vector<double> time;
  std::vector<std::vector<double>> positions;
  std::vector<std::vector<double>> velocities;
  std::vector<double> potential;
  std::vector<double> kinetic;
  std::vector<double> total;

  std::size_t size() const noexcept { return time.size(); }
  double max_relative_drift() const;
  std::string to_csv() const;
};

Trajectory velocity_verlet_run(const ForceProvider& forces, const MdConfig& cfg);

// Reduced 1D bond coordinate: wraps a diatomic Cartesian provider evaluated
// at atoms (0,0,0) and (r,0,0), returning the force along r.
ForceProvider bond_coordinate_provider(std::function<EnergyForces(const MoleculeGeometry&)> cartesian,
                                       std::vector<std::string> elements);
ForceProvider morse_bond_provider(const MorseParams& p);
std::function<EnergyForces(const MoleculeGeometry&)> model_cartesian_provider(const QffModel& model);
ForceProvider model_provider(const QffModel& model);  // 3D, positions = flattened Cartesians

double reduced_mass(double m1, double m2);
// Mass of the most abundant isotope, amu.
double atomic_mass(std::string_view element);

// |r_i - r_j| per recorded frame (or the coordinate itself when dof_per_atom = 1).
std::vector<double> distance_series(const Trajectory& traj, int dof_per_atom, int i = 0, int j = 1);

struct Spectrum {
  std::vector<double> frequency;  // THz
  std::vector<double> magnitude;
  double bin_width = 0.0;         // THz

  std::string to_csv() const;
};

// Tiles the mean-removed series `repetitions` times, applies a Hamming window
// and returns the magnitude for non-negative frequencies.
Spectrum oscillation_spectrum(std::span<const double> series, double dt_fs, int repetitions = 1);
// Frequency of the largest non-DC bin.
double dominant_frequency(const Spectrum& s);

// |c_n| for n = 0..grid_points/2 of f(y) sampled on a uniform grid over
// [0, 2 pi) in feature `feature_index`, other features held at `base`.
std::vector<double> qnn_model_spectrum(const QnnTemplate& tmpl, std::span<const double> theta, int feature_index,
                                       int grid_points, std::span<const double> base = {});

}  // namespace qff
