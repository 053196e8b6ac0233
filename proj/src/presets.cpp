#include "qff/presets.hpp"

#include <cmath>
#include <random>
#include <tuple>

#include "qff/errors.hpp"

namespace qff {

DescriptorPipeline Preset::make_pipeline() const {
  return DescriptorPipeline(static_cast<int>(elements.size()), coords, features);
}

QnnTemplate Preset::make_template() const { return assemble_qnn(encoding, ansatz, depth); }

namespace {

CouplingSpec coupling(int n, Entanglement e, std::vector<std::vector<int>> sets) {
  CouplingSpec c;
  c.num_qubits = n;
  c.entanglement = e;
  c.degree_sets = std::move(sets);
  return c;
}

void set_circuit(Preset& p, const CouplingSpec& c, int depth) {
  static_cast<CouplingSpec&>(p.encoding) = c;
  static_cast<CouplingSpec&>(p.ansatz) = c;
  p.depth = depth;
}

// Pyramidal reference: three H on a circle in z = 0, O at height kHeight.
constexpr double kHydroniumBond = 0.98;
constexpr double kHydroniumHeight = 0.30;

MoleculeGeometry hydronium_geometry(double height, const double (&rho)[3], const double (&phi)[3],
                                    const double (&hz)[3]) {
  MoleculeGeometry g{{"O", "H", "H", "H"}, {0.0, 0.0, height}};
  for (int k = 0; k < 3; ++k) {
    g.cartesian.push_back(rho[k] * std::cos(phi[k]));
    g.cartesian.push_back(rho[k] * std::sin(phi[k]));
    g.cartesian.push_back(hz[k]);
  }
  return g;
}

constexpr double kTwoPiThird = 2.0943951023931953;

MoleculeGeometry hydronium_reference(double height) {
  const double rho = std::sqrt(kHydroniumBond * kHydroniumBond - height * height);
  const double r[3] = {rho, rho, rho};
  const double phi[3] = {0.0, kTwoPiThird, 2.0 * kTwoPiThird};
  const double hz[3] = {0.0, 0.0, 0.0};
  return hydronium_geometry(height, r, phi, hz);
}

}  // namespace

ValenceOracle hydronium_oracle() {
  const auto ref = hydronium_reference(kHydroniumHeight);
  const double theta0 = bond_angle(ref, 1, 0, 2).value;
  const double d0 = std::abs(dihedral(ref, 0, 3, 2, 1).value);
  ValenceOracle v;
  for (int k = 1; k <= 3; ++k) v.bonds.push_back({0, k, 45.0, kHydroniumBond});
  v.angles = {{1, 0, 2, 4.0, theta0}, {1, 0, 3, 4.0, theta0}, {2, 0, 3, 4.0, theta0}};
  v.dihedrals = {{0, 3, 2, 1, 0.1, d0}};
  return v;
}

std::vector<std::string> preset_names() { return {"lih", "h2o", "h3o"}; }

Preset get_preset(std::string_view name) {
  Preset p;
  p.name = std::string(name);
  if (name == "lih") {
    p.elements = {"Li", "H"};
    p.coords = {InternalCoordinate::bond(0, 1)};
    p.features = {{0, Nonlinearity::pi_scale}, {0, Nonlinearity::arcsin}, {0, Nonlinearity::arccos}};
    set_circuit(p, coupling(3, Entanglement::full, {{0, 1, 2}}), 10);
    p.chi = 0.0;
    p.optimizer = "adam";
    p.steps = 4000;
    p.learning_rate = 0.01;
    p.train_size = 50;
    p.test_size = 120;
    p.mirror = true;
    p.mirror_point = 4.5;
    p.range_min = 0.9;
    p.range_max = 4.5;
    return p;
  }
  if (name == "h2o") {
    p.elements = {"O", "H", "H"};
    p.coords = {InternalCoordinate::bond(0, 1), InternalCoordinate::bond(0, 2), InternalCoordinate::angle(1, 0, 2)};
    p.features = {{0, Nonlinearity::arcsin}, {1, Nonlinearity::arcsin}, {2, Nonlinearity::arcsin}};
    set_circuit(p, coupling(3, Entanglement::full, {{0, 1, 2}}), 12);
    p.chi = 1.0;
    p.optimizer = "simplex";
    p.steps = 2000;
    p.train_size = 300;
    p.test_size = 100;
    return p;
  }
  if (name == "h3o") {
    p.elements = {"O", "H", "H", "H"};
    p.coords = {InternalCoordinate::bond(0, 1),     InternalCoordinate::bond(0, 2),
                InternalCoordinate::bond(0, 3),     InternalCoordinate::angle(1, 0, 2),
                InternalCoordinate::angle(1, 0, 3), InternalCoordinate::torsion(0, 3, 2, 1)};
    for (int i = 0; i < 6; ++i) p.features.push_back({i, Nonlinearity::arcsin});
    set_circuit(p, coupling(6, Entanglement::linear, sliding_triples(6)), 10);
    p.chi = 0.0;
    p.optimizer = "adam";
    p.steps = 5000;
    p.train_size = 500;
    p.test_size = 100;
    return p;
  }
  throw ArgumentError("unknown preset '" + std::string(name) + "' (lih|h2o|h3o)");
}

EnergyForces preset_oracle(const Preset& preset, const MoleculeGeometry& geom) {
  if (geom.num_atoms() != static_cast<int>(preset.elements.size())) {
    throw ArgumentError("geometry does not match preset '" + preset.name + "'");
  }
  if (preset.name == "lih") return morse_geometry(geom, MorseParams{});
  if (preset.name == "h2o") return triatomic_oracle(geom, TriatomicParams{});
  if (preset.name == "h3o") return hydronium_oracle().evaluate(geom);
  throw ArgumentError("preset '" + preset.name + "' has no analytic oracle");
}

namespace {

bool passes_filter(const Preset& preset, const MoleculeGeometry& g, const GenOptions& opt) {
  if (!opt.bond_filter) return true;
  for (const auto& c : preset.coords) {
    if (c.kind != CoordKind::bond) continue;
    const double r = c.evaluate(g).value;
    if (r < opt.bond_filter->first || r > opt.bond_filter->second) return false;
  }
  return true;
}

Sample label(const Preset& preset, MoleculeGeometry g, const GenOptions& opt) {
  auto ef = preset_oracle(preset, g);
  if (opt.fd_forces) {
    ef.forces = finite_difference_forces([&](const MoleculeGeometry& x) { return preset_oracle(preset, x).energy; }, g,
                                         opt.fd_step);
  }
  return Sample{std::move(g.cartesian), ef.energy, std::move(ef.forces)};
}

}  // namespace

Dataset generate_dataset(const Preset& preset, const GenOptions& opt) {
  const std::size_t count = opt.count ? opt.count : preset.train_size + preset.test_size;
  Dataset d;
  d.elements = preset.elements;
  d.preset = preset.name;
  std::mt19937_64 rng(opt.seed);
  auto uniform = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
  const std::size_t max_attempts = 1000 * count + 1000;
  std::size_t attempts = 0;
  auto push = [&](MoleculeGeometry g) {
    if (++attempts > max_attempts) throw ArgumentError("sampling range and filter leave no admissible geometry");
    if (passes_filter(preset, g, opt)) d.samples.push_back(label(preset, std::move(g), opt));
  };

  if (preset.name == "lih") {
    double lo = preset.range_min, hi = preset.range_max;
    if (opt.range) std::tie(lo, hi) = *opt.range;
    if (!(lo > 0.0) || !(hi >= lo) || !std::isfinite(hi)) throw ArgumentError("bad bond-length range");
    if (count > 1 && !(hi > lo)) throw ArgumentError("bad bond-length range");
    for (std::size_t i = 0; i < count; ++i) {
      const double r = count == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
      push(MoleculeGeometry{preset.elements, {0.0, 0.0, 0.0, r, 0.0, 0.0}});
    }
    d.provenance = "morse surrogate, uniform grid over [" + std::to_string(lo) + ", " + std::to_string(hi) + "] A";
  } else if (preset.name == "h2o") {
    double lo = 0.85, hi = 1.10;
    if (opt.range) std::tie(lo, hi) = *opt.range;
    if (!(lo > 0.0) || !(hi > lo)) throw ArgumentError("bad bond-length range");
    while (d.samples.size() < count) {
      const double r1 = uniform(lo, hi), r2 = uniform(lo, hi), th = uniform(1.60, 2.05);
      push(MoleculeGeometry{preset.elements,
                            {0.0, 0.0, 0.0, r1, 0.0, 0.0, r2 * std::cos(th), r2 * std::sin(th), 0.0}});
    }
    d.provenance = "harmonic triatomic surrogate, random bonds and angle";
  } else if (preset.name == "h3o") {
    const double rho0 = std::sqrt(kHydroniumBond * kHydroniumBond - kHydroniumHeight * kHydroniumHeight);
    while (d.samples.size() < count) {
      double rho[3], phi[3], hz[3];
      for (int k = 0; k < 3; ++k) {
        rho[k] = rho0 * (1.0 + uniform(-0.05, 0.05));
        phi[k] = k * kTwoPiThird + uniform(-0.08, 0.08);
        hz[k] = uniform(-0.03, 0.03);
      }
      auto g = hydronium_geometry(uniform(-0.45, 0.45), rho, phi, hz);
      if (std::abs(dihedral(g, 0, 3, 2, 1).value) > 0.78) {
        if (++attempts > max_attempts) throw ArgumentError("dihedral sweep produced no admissible geometry");
        continue;
      }
      push(std::move(g));
    }
    d.provenance = "valence surrogate with double-well umbrella dihedral in [-0.78, 0.78] rad";
  } else {
    throw ArgumentError("preset '" + preset.name + "' has no data generator");
  }
  d.provenance += opt.fd_forces ? "; finite-difference forces" : "; analytic forces";
  if (opt.mirror) {
    if (!preset.mirror) throw ArgumentError("mirroring is only defined for diatomic presets");
    d = mirror_augment(d, preset.mirror_point);
  }
  d.validate();
  return d;
}

}  // namespace qff
