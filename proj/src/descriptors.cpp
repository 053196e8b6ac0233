#include "qff/descriptors.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "qff/errors.hpp"
#include "qff/textio.hpp"

namespace qff {

DescriptorDiagnostics& descriptor_diagnostics() {
  static DescriptorDiagnostics d;
  return d;
}

Eigen::Vector3d MoleculeGeometry::atom(int i) const {
  if (i < 0 || i >= num_atoms()) throw ArgumentError("atom index " + std::to_string(i) + " out of range");
  return {cartesian[3 * i], cartesian[3 * i + 1], cartesian[3 * i + 2]};
}

void MoleculeGeometry::validate() const {
  if (cartesian.size() % 3 != 0) throw DataError("cartesian vector length is not a multiple of 3");
  const int n = num_atoms();
  if (n < 2) throw DataError("geometry needs at least 2 atoms");
  if (!elements.empty() && static_cast<int>(elements.size()) != n) {
    throw DataError("element labels do not match atom count");
  }
  for (double c : cartesian)
    if (!std::isfinite(c)) throw DataError("non-finite coordinate");
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if ((atom(i) - atom(j)).norm() <= 1e-8) {
        throw DegenerateGeometryError("atoms " + std::to_string(i) + " and " + std::to_string(j) +
                                      " coincide");
      }
}

namespace {

void put(Eigen::VectorXd& grad, int atom, const Eigen::Vector3d& v) { grad.segment<3>(3 * atom) += v; }

void require_distinct(std::initializer_list<int> idx, int n) {
  std::vector<int> v(idx);
  for (int i : v)
    if (i < 0 || i >= n) throw ArgumentError("atom index " + std::to_string(i) + " out of range");
  std::sort(v.begin(), v.end());
  if (std::adjacent_find(v.begin(), v.end()) != v.end()) {
    throw ArgumentError("internal coordinate atoms must be distinct");
  }
}

}  // namespace

CoordValue bond_length(const MoleculeGeometry& g, int i, int j) {
  require_distinct({i, j}, g.num_atoms());
  const Eigen::Vector3d d = g.atom(i) - g.atom(j);
  const double r = d.norm();
  if (r <= 1e-8) throw DegenerateGeometryError("bond atoms coincide");
  CoordValue out{r, Eigen::VectorXd::Zero(g.cartesian.size())};
  put(out.gradient, i, d / r);
  put(out.gradient, j, -d / r);
  return out;
}

CoordValue bond_angle(const MoleculeGeometry& g, int i, int j, int k) {
  require_distinct({i, j, k}, g.num_atoms());
  const Eigen::Vector3d u = g.atom(i) - g.atom(j);
  const Eigen::Vector3d v = g.atom(k) - g.atom(j);
  const double nu = u.norm();
  const double nv = v.norm();
  if (nu <= 1e-8 || nv <= 1e-8) throw DegenerateGeometryError("bond angle arm has zero length");
  double c = u.dot(v) / (nu * nv);
  CoordValue out{0.0, Eigen::VectorXd::Zero(g.cartesian.size())};
  if (std::abs(c) >= 1.0 - 1e-10) {
    descriptor_diagnostics().near_singular_angles.fetch_add(1, std::memory_order_relaxed);
    c = std::clamp(c, -1.0, 1.0);
    out.value = std::acos(c);
    return out;  // gradient undefined on the collinear set
  }
  out.value = std::acos(c);
  const double s = std::sqrt(1.0 - c * c);
  const Eigen::Vector3d di = -(v / (nu * nv) - c * u / (nu * nu)) / s;
  const Eigen::Vector3d dk = -(u / (nu * nv) - c * v / (nv * nv)) / s;
  put(out.gradient, i, di);
  put(out.gradient, k, dk);
  put(out.gradient, j, -(di + dk));
  return out;
}

CoordValue dihedral(const MoleculeGeometry& g, int i, int j, int k, int l) {
  require_distinct({i, j, k, l}, g.num_atoms());
  const Eigen::Vector3d ri = g.atom(i), rj = g.atom(j), rk = g.atom(k), rl = g.atom(l);
  const Eigen::Vector3d r_ij = ri - rj;
  const Eigen::Vector3d r_kj = rk - rj;
  const Eigen::Vector3d r_kl = rk - rl;
  const Eigen::Vector3d n1 = r_ij.cross(r_kj);
  const Eigen::Vector3d n2 = r_kj.cross(r_kl);
  const double a2 = n1.squaredNorm();
  const double b2 = n2.squaredNorm();
  if (std::sqrt(a2) <= 1e-10 || std::sqrt(b2) <= 1e-10) {
    throw DegenerateGeometryError("dihedral has collinear atom triple");
  }
  const double c = std::clamp(n1.dot(n2) / std::sqrt(a2 * b2), -1.0, 1.0);
  const double chi = r_kj.dot(n1.cross(n2));
  CoordValue out{(chi < 0.0 ? -1.0 : 1.0) * std::acos(c), Eigen::VectorXd::Zero(g.cartesian.size())};

  // Analytic gradient in the Blondel-Karplus form with F = r_i - r_j,
  // G = r_j - r_k, H = r_l - r_k; n1 = -(F x G), n2 = -(H x G) give the
  // same angle and sign as above.
  const Eigen::Vector3d F = r_ij;
  const Eigen::Vector3d G = rj - rk;
  const Eigen::Vector3d H = rl - rk;
  const Eigen::Vector3d A = F.cross(G);
  const Eigen::Vector3d B = H.cross(G);
  const double gn = G.norm();
  const double fg = F.dot(G);
  const double hg = H.dot(G);
  const Eigen::Vector3d dA = A / a2;
  const Eigen::Vector3d dB = B / b2;
  put(out.gradient, i, -gn * dA);
  put(out.gradient, l, gn * dB);
  put(out.gradient, j, gn * dA + (fg / gn) * dA - (hg / gn) * dB);
  put(out.gradient, k, -gn * dB - (fg / gn) * dA + (hg / gn) * dB);
  return out;
}

CoordValue InternalCoordinate::evaluate(const MoleculeGeometry& g) const {
  switch (kind) {
    case CoordKind::bond:
      return bond_length(g, atoms.at(0), atoms.at(1));
    case CoordKind::angle:
      return bond_angle(g, atoms.at(0), atoms.at(1), atoms.at(2));
    case CoordKind::dihedral:
      return dihedral(g, atoms.at(0), atoms.at(1), atoms.at(2), atoms.at(3));
  }
  throw ArgumentError("unknown coordinate kind");
}

void InternalCoordinate::validate(int num_atoms) const {
  const std::size_t want = kind == CoordKind::bond ? 2 : kind == CoordKind::angle ? 3 : 4;
  if (atoms.size() != want) throw ArgumentError("wrong atom count for internal coordinate");
  std::vector<int> v = atoms;
  for (int i : v)
    if (i < 0 || i >= num_atoms) throw ArgumentError("internal coordinate atom index out of range");
  std::sort(v.begin(), v.end());
  if (std::adjacent_find(v.begin(), v.end()) != v.end()) {
    throw ArgumentError("internal coordinate atoms must be distinct");
  }
}

std::string InternalCoordinate::to_string() const {
  std::string s = kind == CoordKind::bond ? "bond" : kind == CoordKind::angle ? "angle" : "dihedral";
  for (int a : atoms) s += " " + std::to_string(a);
  return s;
}

InternalCoordinate InternalCoordinate::parse(std::string_view s) {
  const auto tok = text::split_ws(s);
  if (tok.empty()) throw ArgumentError("empty internal coordinate");
  InternalCoordinate c;
  if (tok[0] == "bond") {
    c.kind = CoordKind::bond;
  } else if (tok[0] == "angle") {
    c.kind = CoordKind::angle;
  } else if (tok[0] == "dihedral") {
    c.kind = CoordKind::dihedral;
  } else {
    throw ArgumentError("unknown internal coordinate '" + tok[0] + "'");
  }
  for (std::size_t i = 1; i < tok.size(); ++i) c.atoms.push_back(static_cast<int>(text::parse_int(tok[i])));
  return c;
}

MinMaxScaler MinMaxScaler::fit(std::span<const double> values) {
  if (values.empty()) throw DataError("cannot fit scaler on empty column");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  if (!(*hi > *lo)) throw DataError("degenerate scaler: constant column");
  return {*lo, *hi};
}

const char* nonlinearity_name(Nonlinearity n) {
  switch (n) {
    case Nonlinearity::pi_scale:
      return "pi_scale";
    case Nonlinearity::arcsin:
      return "arcsin";
    case Nonlinearity::arccos:
      return "arccos";
    case Nonlinearity::identity:
      return "identity";
  }
  return "?";
}

Nonlinearity parse_nonlinearity(std::string_view s) {
  if (s == "pi_scale") return Nonlinearity::pi_scale;
  if (s == "arcsin") return Nonlinearity::arcsin;
  if (s == "arccos") return Nonlinearity::arccos;
  if (s == "identity") return Nonlinearity::identity;
  throw ArgumentError("unknown nonlinearity '" + std::string(s) + "'");
}

namespace {

struct Scalar1 {
  double value;
  double derivative;
};

// Exact arcsin/arccos on [-1, 1]; slope frozen at the 1 - eps boundary and
// zero outside [-1, 1], where the clamped value is flat.
Scalar1 arc(double s, bool cosine) {
  const double bound = 1.0 - kArcClampEps;
  if (std::abs(s) > bound) descriptor_diagnostics().clamped_inputs.fetch_add(1, std::memory_order_relaxed);
  if (std::abs(s) >= 1.0) {
    const double c = std::clamp(s, -1.0, 1.0);
    return {cosine ? std::acos(c) : std::asin(c), 0.0};
  }
  const double sd = std::clamp(s, -bound, bound);
  const double slope = 1.0 / std::sqrt(1.0 - sd * sd);
  return {cosine ? std::acos(s) : std::asin(s), cosine ? -slope : slope};
}

Scalar1 apply_nonlinearity(Nonlinearity n, double s) {
  switch (n) {
    case Nonlinearity::pi_scale:
      return {std::numbers::pi * s, std::numbers::pi};
    case Nonlinearity::arcsin:
      return arc(s, false);
    case Nonlinearity::arccos:
      return arc(s, true);
    case Nonlinearity::identity:
      return {s, 1.0};
  }
  return {s, 1.0};
}

}  // namespace

DescriptorPipeline::DescriptorPipeline(int num_atoms, std::vector<InternalCoordinate> coords,
                                       std::vector<FeatureDef> features)
    : num_atoms_(num_atoms), coords_(std::move(coords)), features_(std::move(features)) {
  if (num_atoms < 2) throw ArgumentError("pipeline needs at least 2 atoms");
  if (coords_.empty() || features_.empty()) throw ArgumentError("pipeline needs coordinates and features");
  for (const auto& c : coords_) c.validate(num_atoms);
  for (const auto& f : features_) {
    if (f.coord < 0 || f.coord >= num_coords()) throw ArgumentError("feature references unknown coordinate");
  }
}

void DescriptorPipeline::fit(std::span<const MoleculeGeometry> training) {
  std::vector<std::vector<double>> columns(coords_.size());
  for (const auto& g : training) {
    const auto v = internal_coordinates(g);
    for (std::size_t c = 0; c < v.size(); ++c) columns[c].push_back(v[c]);
  }
  std::vector<MinMaxScaler> s;
  for (const auto& col : columns) s.push_back(MinMaxScaler::fit(col));
  scalers_ = std::move(s);
}

void DescriptorPipeline::set_scalers(std::vector<MinMaxScaler> s) {
  if (s.size() != coords_.size()) throw ArgumentError("scaler count does not match coordinate count");
  for (const auto& m : s)
    if (!(m.max > m.min)) throw DataError("degenerate scaler: max <= min");
  scalers_ = std::move(s);
}

void DescriptorPipeline::require_fitted() const {
  if (!fitted()) throw ArgumentError("descriptor pipeline used before fit");
}

std::vector<double> DescriptorPipeline::internal_coordinates(const MoleculeGeometry& g) const {
  if (g.num_atoms() != num_atoms_) {
    throw DataError("geometry has " + std::to_string(g.num_atoms()) + " atoms, pipeline expects " +
                    std::to_string(num_atoms_));
  }
  std::vector<double> out;
  for (const auto& c : coords_) out.push_back(c.evaluate(g).value);
  return out;
}

PipelineOutput DescriptorPipeline::evaluate(const MoleculeGeometry& g, bool with_jacobian) const {
  require_fitted();
  if (g.num_atoms() != num_atoms_) {
    throw DataError("geometry has " + std::to_string(g.num_atoms()) + " atoms, pipeline expects " +
                    std::to_string(num_atoms_));
  }
  std::vector<CoordValue> cv;
  for (const auto& c : coords_) cv.push_back(c.evaluate(g));
  PipelineOutput out;
  out.features.resize(features_.size());
  if (with_jacobian) out.jacobian = PipelineJacobian::Zero(num_features(), 3 * num_atoms_);
  for (std::size_t f = 0; f < features_.size(); ++f) {
    const auto& def = features_[f];
    const auto& sc = scalers_[def.coord];
    const auto y = apply_nonlinearity(def.nonlinearity, sc.apply(cv[def.coord].value));
    out.features[f] = y.value;
    if (with_jacobian) {
      out.jacobian.row(f) = (y.derivative * sc.derivative()) * cv[def.coord].gradient.transpose();
    }
  }
  return out;
}

std::vector<double> DescriptorPipeline::apply(const MoleculeGeometry& g) const {
  return evaluate(g, false).features;
}

PipelineJacobian DescriptorPipeline::jacobian(const MoleculeGeometry& g) const {
  return evaluate(g, true).jacobian;
}

std::string DescriptorPipeline::to_text() const {
  std::ostringstream os;
  os << "pipeline.atoms = " << num_atoms_ << '\n';
  for (std::size_t c = 0; c < coords_.size(); ++c) {
    os << "pipeline.coord = " << coords_[c].to_string();
    if (fitted()) {
      os << " | " << text::format_double(scalers_[c].min) << ' ' << text::format_double(scalers_[c].max);
    }
    os << '\n';
  }
  for (const auto& f : features_) {
    os << "pipeline.feature = " << f.coord << ' ' << nonlinearity_name(f.nonlinearity) << '\n';
  }
  return os.str();
}

DescriptorPipeline DescriptorPipeline::from_text(const std::string& body) {
  const auto doc = text::KeyValueDoc::parse(body);
  const auto& atoms = doc.get("pipeline.atoms");
  const int n = static_cast<int>(text::parse_int(atoms.value, atoms.line));
  std::vector<InternalCoordinate> coords;
  std::vector<MinMaxScaler> scalers;
  for (const auto* e : doc.all("pipeline.coord")) {
    const auto parts = text::split(e->value, '|');
    try {
      coords.push_back(InternalCoordinate::parse(parts[0]));
    } catch (const ParseError&) {
      throw;
    } catch (const Error& err) {
      throw ParseError(err.what(), e->line);
    }
    if (parts.size() == 2) {
      const auto b = text::parse_doubles(parts[1], e->line);
      if (b.size() != 2) throw ParseError("expected 'min max' scaler bounds", e->line);
      scalers.push_back({b[0], b[1]});
    } else if (parts.size() > 2) {
      throw ParseError("malformed coordinate entry", e->line);
    }
  }
  std::vector<FeatureDef> feats;
  for (const auto* e : doc.all("pipeline.feature")) {
    const auto tok = text::split_ws(e->value);
    if (tok.size() != 2) throw ParseError("expected 'coord nonlinearity'", e->line);
    try {
      feats.push_back({static_cast<int>(text::parse_int(tok[0], e->line)), parse_nonlinearity(tok[1])});
    } catch (const ParseError&) {
      throw;
    } catch (const Error& err) {
      throw ParseError(err.what(), e->line);
    }
  }
  DescriptorPipeline p;
  try {
    p = DescriptorPipeline(n, std::move(coords), std::move(feats));
    if (!scalers.empty()) p.set_scalers(std::move(scalers));
  } catch (const ParseError&) {
    throw;
  } catch (const Error& err) {
    throw ParseError(std::string("invalid pipeline: ") + err.what(), atoms.line);
  }
  return p;
}

}  // namespace qff
