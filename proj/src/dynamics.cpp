#include "qff/dynamics.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <memory>
#include <numbers>
#include <sstream>

#include "qff/errors.hpp"
#include "qff/gradients.hpp"
#include "qff/textio.hpp"

namespace qff {

void MdConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ArgumentError("time step must be positive");
  if (steps < 0) throw ArgumentError("step count must be non-negative");
  if (record_every < 1) throw ArgumentError("record interval must be at least 1");
  if (dof_per_atom < 1 || dof_per_atom > 3) throw ArgumentError("degrees of freedom per atom must be 1, 2 or 3");
  if (masses.empty()) throw ArgumentError("MD needs at least one mass");
  for (double m : masses)
    if (!(m > 0.0)) throw ArgumentError("masses must be positive");
  const std::size_t n = masses.size() * static_cast<std::size_t>(dof_per_atom);
  if (positions.size() != n) throw ArgumentError("position vector length does not match masses");
  if (!velocities.empty() && velocities.size() != n) throw ArgumentError("velocity vector length does not match masses");
}

namespace {

double kinetic_energy(std::span<const double> v, std::span<const double> inv_mass) {
  double ke = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) ke += 0.5 * v[i] * v[i] / inv_mass[i];
  return ke * kKineticToEv;
}

EnergyForces checked_eval(const ForceProvider& provider, std::span<const double> x, int step) {
  EnergyForces ef;
  try {
    ef = provider(x);
  } catch (const Error& e) {
    throw NumericalError("force evaluation failed at MD step " + std::to_string(step) + ": " + e.what());
  }
  if (ef.forces.size() != x.size()) {
    throw NumericalError("force provider returned " + std::to_string(ef.forces.size()) + " components at step " +
                         std::to_string(step));
  }
  bool finite = std::isfinite(ef.energy);
  for (double f : ef.forces) finite = finite && std::isfinite(f);
  if (!finite) throw NumericalError("non-finite energy or force at MD step " + std::to_string(step));
  return ef;
}

}  // namespace

Trajectory velocity_verlet_run(const ForceProvider& provider, const MdConfig& cfg) {
  cfg.validate();
  const std::size_t n = cfg.positions.size();
  std::vector<double> inv_mass(n);
  for (std::size_t i = 0; i < n; ++i) inv_mass[i] = 1.0 / cfg.masses[i / cfg.dof_per_atom];
  std::vector<double> x = cfg.positions;
  std::vector<double> v = cfg.velocities.empty() ? std::vector<double>(n, 0.0) : cfg.velocities;
  Trajectory traj;
  traj.dt = cfg.dt * cfg.record_every;
  auto record = [&](int step, double pot) {
    const double ke = kinetic_energy(v, inv_mass);
    traj.time.push_back(step * cfg.dt);
    traj.positions.push_back(x);
    traj.velocities.push_back(v);
    traj.potential.push_back(pot);
    traj.kinetic.push_back(ke);
    traj.total.push_back(pot + ke);
  };
  EnergyForces ef = checked_eval(provider, x, 0);
  record(0, ef.energy);
  const double dt = cfg.dt;
  for (int step = 1; step <= cfg.steps; ++step) {
    for (std::size_t i = 0; i < n; ++i) {
      const double a = ef.forces[i] * inv_mass[i] * kForceToAccel;
      x[i] += v[i] * dt + 0.5 * a * dt * dt;
      v[i] += 0.5 * a * dt;
    }
    ef = checked_eval(provider, x, step);
    for (std::size_t i = 0; i < n; ++i) v[i] += 0.5 * ef.forces[i] * inv_mass[i] * kForceToAccel * dt;
    if (step % cfg.record_every == 0) record(step, ef.energy);
  }
  return traj;
}

double Trajectory::max_relative_drift() const {
  if (total.empty()) return 0.0;
  const double e0 = total.front();
  const double denom = std::abs(e0) > 0.0 ? std::abs(e0) : 1.0;
  double worst = 0.0;
  for (double e : total) worst = std::max(worst, std::abs(e - e0) / denom);
  return worst;
}

std::string Trajectory::to_csv() const {
  std::ostringstream os;
  const std::size_t dof = positions.empty() ? 0 : positions.front().size();
  os << "t_fs";
  for (std::size_t i = 0; i < dof; ++i) os << ",x" << i;
  for (std::size_t i = 0; i < dof; ++i) os << ",v" << i;
  os << ",potential_eV,kinetic_eV,total_eV\n";
  for (std::size_t k = 0; k < size(); ++k) {
    os << text::format_double(time[k]);
    for (double p : positions[k]) os << ',' << text::format_double(p);
    for (double p : velocities[k]) os << ',' << text::format_double(p);
    os << ',' << text::format_double(potential[k]) << ',' << text::format_double(kinetic[k]) << ','
       << text::format_double(total[k]) << '\n';
  }
  return os.str();
}

ForceProvider bond_coordinate_provider(std::function<EnergyForces(const MoleculeGeometry&)> cartesian,
                                       std::vector<std::string> elements) {
  if (elements.size() != 2) throw ArgumentError("bond coordinate dynamics needs a diatomic");
  return [cartesian = std::move(cartesian), elements = std::move(elements)](std::span<const double> r) {
    if (r.size() != 1) throw ArgumentError("bond coordinate provider expects one coordinate");
    MoleculeGeometry g{elements, {0.0, 0.0, 0.0, r[0], 0.0, 0.0}};
    const auto ef = cartesian(g);
    return EnergyForces{ef.energy, {ef.forces.at(3)}};
  };
}

ForceProvider morse_bond_provider(const MorseParams& p) {
  return [p](std::span<const double> r) {
    if (r.size() != 1) throw ArgumentError("Morse provider expects one coordinate");
    if (!(r[0] > 0.0)) throw DegenerateGeometryError("bond length collapsed to " + text::format_double(r[0]));
    const auto m = morse_oracle(r[0], p);
    return EnergyForces{m.energy, {m.force}};
  };
}

std::function<EnergyForces(const MoleculeGeometry&)> model_cartesian_provider(const QffModel& model) {
  return [&model](const MoleculeGeometry& g) {
    auto p = predict(model, g, true);
    return EnergyForces{p.energy, std::move(p.forces)};
  };
}

ForceProvider model_provider(const QffModel& model) {
  return [&model](std::span<const double> x) {
    MoleculeGeometry g;
    g.cartesian.assign(x.begin(), x.end());
    auto it = model.metadata.find("elements");
    if (it != model.metadata.end()) g.elements = text::split_ws(it->second);
    if (g.elements.size() != g.cartesian.size() / 3) g.elements.assign(g.cartesian.size() / 3, "X");
    auto p = predict(model, g, true);
    return EnergyForces{p.energy, std::move(p.forces)};
  };
}

double reduced_mass(double m1, double m2) {
  if (!(m1 > 0.0) || !(m2 > 0.0)) throw ArgumentError("masses must be positive");
  return m1 * m2 / (m1 + m2);
}

double atomic_mass(std::string_view el) {
  if (el == "H") return 1.00782503;
  if (el == "Li") return 7.01600344;
  if (el == "C") return 12.0;
  if (el == "N") return 14.00307401;
  if (el == "O") return 15.99491462;
  throw ArgumentError("no tabulated mass for element '" + std::string(el) + "'");
}

std::vector<double> distance_series(const Trajectory& traj, int dof_per_atom, int i, int j) {
  std::vector<double> out;
  out.reserve(traj.size());
  for (const auto& x : traj.positions) {
    if (dof_per_atom == 1 && x.size() == 1) {
      out.push_back(x[0]);
      continue;
    }
    double s = 0.0;
    for (int c = 0; c < dof_per_atom; ++c) {
      const double d = x.at(i * dof_per_atom + c) - x.at(j * dof_per_atom + c);
      s += d * d;
    }
    out.push_back(std::sqrt(s));
  }
  return out;
}

std::string Spectrum::to_csv() const {
  std::ostringstream os;
  os << "frequency_THz,magnitude\n";
  for (std::size_t k = 0; k < frequency.size(); ++k)
    os << text::format_double(frequency[k]) << ',' << text::format_double(magnitude[k]) << '\n';
  return os.str();
}

Spectrum oscillation_spectrum(std::span<const double> series, double dt_fs, int repetitions) {
  if (series.empty()) throw ArgumentError("spectrum of an empty trajectory");
  if (repetitions < 1) throw ArgumentError("repetitions must be at least 1");
  if (!(dt_fs > 0.0)) throw ArgumentError("time step must be positive");
  double mean = 0.0;
  for (double v : series) mean += v;
  mean /= static_cast<double>(series.size());
  const std::size_t L = series.size() * static_cast<std::size_t>(repetitions);
  std::vector<double> buf(L);
  for (std::size_t k = 0; k < L; ++k) {
    const double w = L > 1 ? 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * k / static_cast<double>(L - 1)) : 1.0;
    buf[k] = w * (series[k % series.size()] - mean);
  }
  const std::size_t bins = L / 2 + 1;
  std::unique_ptr<fftw_complex, decltype(&fftw_free)> out(
      static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * bins)), &fftw_free);
  if (!out) throw NumericalError("FFT buffer allocation failed");
  fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(L), buf.data(), out.get(), FFTW_ESTIMATE);
  fftw_execute(plan);
  fftw_destroy_plan(plan);
  Spectrum s;
  s.bin_width = 1000.0 / (static_cast<double>(L) * dt_fs);  // 1/fs = 1000 THz
  s.frequency.resize(bins);
  s.magnitude.resize(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    s.frequency[k] = static_cast<double>(k) * s.bin_width;
    s.magnitude[k] = std::hypot(out.get()[k][0], out.get()[k][1]);
  }
  return s;
}

double dominant_frequency(const Spectrum& s) {
  if (s.magnitude.size() < 2) throw ArgumentError("spectrum too short for a dominant frequency");
  std::size_t best = 1;
  for (std::size_t k = 2; k < s.magnitude.size(); ++k)
    if (s.magnitude[k] > s.magnitude[best]) best = k;
  return s.frequency[best];
}

std::vector<double> qnn_model_spectrum(const QnnTemplate& tmpl, std::span<const double> theta, int feature_index,
                                       int grid_points, std::span<const double> base) {
  const int N = tmpl.num_features();
  if (feature_index < 0 || feature_index >= N) throw ArgumentError("feature index out of range");
  if (grid_points < 2) throw ArgumentError("spectrum grid needs at least two points");
  std::vector<double> y(N, 0.0);
  if (!base.empty()) {
    if (static_cast<int>(base.size()) != N) throw ArgumentError("base point has the wrong number of features");
    y.assign(base.begin(), base.end());
  }
  std::vector<double> f(grid_points);
  for (int k = 0; k < grid_points; ++k) {
    y[feature_index] = 2.0 * std::numbers::pi * k / grid_points;
    f[k] = eval_qnn(tmpl, y, theta);
  }
  std::vector<double> mag(grid_points / 2 + 1);
  for (std::size_t n = 0; n < mag.size(); ++n) {
    std::complex<double> c = 0.0;
    for (int k = 0; k < grid_points; ++k)
      c += f[k] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(n * k) / grid_points);
    mag[n] = std::abs(c) / grid_points;
  }
  return mag;
}

}  // namespace qff
