#include "qff/data.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "qff/errors.hpp"
#include "qff/textio.hpp"

namespace qff {

bool Dataset::has_forces() const {
  if (samples.empty()) return false;
  for (const auto& s : samples)
    if (!s.forces) return false;
  return true;
}

std::vector<MoleculeGeometry> Dataset::geometries() const {
  std::vector<MoleculeGeometry> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back({elements, s.cartesian});
  return out;
}

std::vector<double> Dataset::energies() const {
  std::vector<double> out;
  for (const auto& s : samples) out.push_back(s.energy);
  return out;
}

void Dataset::validate() const {
  if (samples.empty()) throw DataError("dataset is empty");
  const std::size_t n3 = 3 * elements.size();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    if (s.cartesian.size() != n3) throw DataError("sample " + std::to_string(i) + " has wrong coordinate count");
    if (!std::isfinite(s.energy)) throw DataError("sample " + std::to_string(i) + " has non-finite energy");
    if (s.forces && s.forces->size() != n3) throw DataError("sample " + std::to_string(i) + " has wrong force count");
  }
}

MorseValue morse_oracle(double r, const MorseParams& p) {
  if (!(r > 0.0)) throw ArgumentError("Morse oracle needs r > 0");
  const double e = std::exp(-p.alpha * (r - p.r_eq));
  const double one_minus = 1.0 - e;
  return {p.well_depth * one_minus * one_minus, -2.0 * p.well_depth * p.alpha * one_minus * e};
}

EnergyForces morse_geometry(const MoleculeGeometry& geom, const MorseParams& p) {
  if (geom.num_atoms() != 2) throw ArgumentError("Morse oracle needs a diatomic geometry");
  const auto bond = bond_length(geom, 0, 1);
  const auto m = morse_oracle(bond.value, p);
  EnergyForces out{m.energy, std::vector<double>(6)};
  // F_c = -dV/dr * dr/dc = force * dr/dc
  for (int c = 0; c < 6; ++c) out.forces[c] = m.force * bond.gradient[c];
  return out;
}

EnergyForces ValenceOracle::evaluate(const MoleculeGeometry& geom) const {
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(geom.cartesian.size());
  double e = 0.0;
  for (const auto& b : bonds) {
    const auto c = bond_length(geom, b.i, b.j);
    const double dr = c.value - b.r0;
    e += 0.5 * b.k * dr * dr;
    grad += b.k * dr * c.gradient;
  }
  for (const auto& a : angles) {
    const auto c = bond_angle(geom, a.i, a.j, a.k);
    const double dt = c.value - a.theta0;
    e += 0.5 * a.k_theta * dt * dt;
    grad += a.k_theta * dt * c.gradient;
  }
  for (const auto& w : dihedrals) {
    const auto c = dihedral(geom, w.i, w.j, w.k, w.l);
    const double u = c.value * c.value / (w.d0 * w.d0) - 1.0;
    e += w.barrier * u * u;
    grad += w.barrier * 2.0 * u * (2.0 * c.value / (w.d0 * w.d0)) * c.gradient;
  }
  EnergyForces out{e, std::vector<double>(grad.size())};
  for (Eigen::Index c = 0; c < grad.size(); ++c) out.forces[c] = -grad[c];
  return out;
}

EnergyForces triatomic_oracle(const MoleculeGeometry& geom, const TriatomicParams& p) {
  if (geom.num_atoms() != 3) throw ArgumentError("triatomic oracle needs 3 atoms");
  ValenceOracle v;
  v.bonds = {{0, 1, p.k_bond, p.r_eq}, {0, 2, p.k_bond, p.r_eq}};
  v.angles = {{1, 0, 2, p.k_angle, p.theta_eq}};
  return v.evaluate(geom);
}

std::vector<double> finite_difference_forces(const EnergyFn& energy, const MoleculeGeometry& geom, double h) {
  if (!(h > 0.0)) throw ArgumentError("finite-difference step must be positive");
  std::vector<double> f(geom.cartesian.size());
  MoleculeGeometry g = geom;
  for (std::size_t c = 0; c < f.size(); ++c) {
    const double x = geom.cartesian[c];
    g.cartesian[c] = x + h;
    const double ep = energy(g);
    g.cartesian[c] = x - h;
    const double em = energy(g);
    g.cartesian[c] = x;
    f[c] = -(ep - em) / (2.0 * h);
  }
  return f;
}

double bond_coordinate(const Sample& s) {
  if (s.cartesian.size() != 6) throw ArgumentError("bond coordinate needs a diatomic sample");
  const double dx = s.cartesian[3] - s.cartesian[0];
  const double dy = s.cartesian[4] - s.cartesian[1];
  const double dz = s.cartesian[5] - s.cartesian[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

Sample mirror_sample(const Sample& s, double r_m) {
  const double r = bond_coordinate(s);
  if (!(r > 0.0)) throw DegenerateGeometryError("mirror of a zero-length bond");
  const double r_new = 2.0 * r_m - r;
  if (!(r_new > 0.0)) throw ArgumentError("mirror image has non-positive bond length");
  Sample out = s;
  for (int c = 0; c < 3; ++c) {
    const double u = (s.cartesian[3 + c] - s.cartesian[c]) / r;
    out.cartesian[3 + c] = s.cartesian[c] + r_new * u;
  }
  if (out.forces) {
    for (double& f : *out.forces) f = -f;
  }
  return out;
}

Dataset mirror_augment(const Dataset& data, double r_m) {
  if (data.num_atoms() != 2) throw ArgumentError("mirroring needs a diatomic dataset");
  data.validate();
  constexpr double kTol = 1e-12;
  Dataset out = data;
  for (const auto& s : data.samples) {
    const double r = bond_coordinate(s);
    if (r > r_m + kTol) {
      throw ArgumentError("sample at r = " + text::format_double(r) + " lies beyond mirror point " +
                          text::format_double(r_m));
    }
    if (std::abs(r - r_m) <= kTol) continue;
    out.samples.push_back(mirror_sample(s, r_m));
  }
  out.provenance = data.provenance + (data.provenance.empty() ? "" : "; ") + "mirrored at r=" +
                   text::format_double(r_m);
  return out;
}

std::string dataset_to_text(const Dataset& data) {
  data.validate();
  const bool forces = data.has_forces();
  std::ostringstream os;
  if (!data.preset.empty()) os << "# preset: " << data.preset << '\n';
  if (!data.provenance.empty()) os << "# provenance: " << data.provenance << '\n';
  os << data.num_atoms();
  for (const auto& e : data.elements) os << ' ' << e;
  os << (forces ? " forces" : " noforces") << '\n';
  for (const auto& s : data.samples) {
    os << text::join_doubles(s.cartesian) << ' ' << text::format_double(s.energy);
    if (forces) os << ' ' << text::join_doubles(*s.forces);
    os << '\n';
  }
  return os.str();
}

Dataset dataset_from_text(const std::string& content) {
  Dataset d;
  std::istringstream in(content);
  std::string raw;
  int lineno = 0;
  bool header = false;
  bool forces = false;
  std::size_t width = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto line = text::trim(raw);
    if (line.empty()) continue;
    if (line.front() == '#') {
      const auto body = text::trim(line.substr(1));
      if (body.rfind("preset:", 0) == 0) d.preset = std::string(text::trim(body.substr(7)));
      if (body.rfind("provenance:", 0) == 0) d.provenance = std::string(text::trim(body.substr(11)));
      continue;
    }
    const auto tok = text::split_ws(line);
    if (!header) {
      const long n = text::parse_int(tok[0], lineno);
      if (n < 1 || static_cast<long>(tok.size()) != n + 2) {
        throw ParseError("header must be '<natoms> <element>... forces|noforces'", lineno);
      }
      d.elements.assign(tok.begin() + 1, tok.begin() + 1 + n);
      if (tok.back() == "forces") {
        forces = true;
      } else if (tok.back() != "noforces") {
        throw ParseError("unknown header flag '" + tok.back() + "'", lineno);
      }
      width = 3 * n + 1 + (forces ? 3 * n : 0);
      header = true;
      continue;
    }
    if (tok.size() != width) {
      throw ParseError("expected " + std::to_string(width) + " values, got " + std::to_string(tok.size()), lineno);
    }
    const std::size_t n3 = 3 * d.elements.size();
    Sample s;
    for (std::size_t i = 0; i < n3; ++i) s.cartesian.push_back(text::parse_double(tok[i], lineno));
    s.energy = text::parse_double(tok[n3], lineno);
    if (forces) {
      s.forces.emplace();
      for (std::size_t i = 0; i < n3; ++i) s.forces->push_back(text::parse_double(tok[n3 + 1 + i], lineno));
    }
    d.samples.push_back(std::move(s));
  }
  if (!header) throw ParseError("missing dataset header", lineno);
  if (d.samples.empty()) throw ParseError("dataset has no samples", lineno);
  return d;
}

void save_dataset(const Dataset& data, const std::string& path) { text::write_file(path, dataset_to_text(data)); }

Dataset load_dataset(const std::string& path) { return dataset_from_text(text::read_file(path)); }

Dataset convert_xyz_dump(const std::string& content) {
  Dataset d;
  d.provenance = "converted from xyz dump";
  std::istringstream in(content);
  std::string raw;
  int lineno = 0;
  auto next = [&](std::string& out) {
    while (std::getline(in, out)) {
      ++lineno;
      if (!text::trim(out).empty()) return true;
    }
    return false;
  };
  bool forces_all = true;
  while (next(raw)) {
    const long n = text::parse_int(raw, lineno);
    if (n < 1) throw ParseError("frame atom count must be positive", lineno);
    if (!next(raw)) throw ParseError("truncated frame: missing comment line", lineno);
    Sample s;
    bool found = false;
    for (const auto& tok : text::split_ws(raw)) {
      if (tok.rfind("energy=", 0) == 0) {
        s.energy = text::parse_double(tok.substr(7), lineno);
        found = true;
      }
    }
    if (!found) throw ParseError("frame comment line lacks 'energy=<value>'", lineno);
    std::vector<std::string> elements;
    std::vector<double> f;
    for (long a = 0; a < n; ++a) {
      if (!next(raw)) throw ParseError("truncated frame: missing atom line", lineno);
      const auto tok = text::split_ws(raw);
      if (tok.size() != 4 && tok.size() != 7) throw ParseError("atom line needs 4 or 7 fields", lineno);
      elements.push_back(tok[0]);
      for (int c = 1; c <= 3; ++c) s.cartesian.push_back(text::parse_double(tok[c], lineno));
      if (tok.size() == 7) {
        for (int c = 4; c <= 6; ++c) f.push_back(text::parse_double(tok[c], lineno));
      }
    }
    if (d.samples.empty()) {
      d.elements = elements;
    } else if (elements != d.elements) {
      throw ParseError("frame atoms differ from the first frame", lineno);
    }
    if (f.size() == s.cartesian.size()) {
      s.forces = std::move(f);
    } else {
      forces_all = false;
    }
    d.samples.push_back(std::move(s));
  }
  if (d.samples.empty()) throw ParseError("no frames found", lineno);
  if (!forces_all) {
    for (auto& s : d.samples) s.forces.reset();
  }
  return d;
}

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

std::pair<Dataset, Dataset> train_test_split(const Dataset& data, std::size_t n_train, std::uint64_t seed) {
  if (n_train > data.size()) {
    throw ArgumentError("requested " + std::to_string(n_train) + " training samples from a set of " +
                        std::to_string(data.size()));
  }
  const auto perm = seeded_permutation(data.size(), seed);
  Dataset train = data, test = data;
  train.samples.clear();
  test.samples.clear();
  for (std::size_t i = 0; i < perm.size(); ++i) {
    (i < n_train ? train : test).samples.push_back(data.samples[perm[i]]);
  }
  return {std::move(train), std::move(test)};
}

}  // namespace qff
