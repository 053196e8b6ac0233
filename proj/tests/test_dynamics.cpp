#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qff/dynamics.hpp"
#include "qff/errors.hpp"
#include "test_util.hpp"

using namespace qff;

namespace {

ForceProvider harmonic(double k, double x0 = 0.0) {
  return [k, x0](std::span<const double> x) {
    EnergyForces ef;
    ef.energy = 0.0;
    for (double xi : x) {
      ef.energy += 0.5 * k * (xi - x0) * (xi - x0);
      ef.forces.push_back(-k * (xi - x0));
    }
    return ef;
  };
}

// Time between successive upward zero crossings, averaged.
double measured_period(const std::vector<double>& x, double dt) {
  std::vector<double> crossings;
  for (std::size_t i = 1; i < x.size(); ++i)
    if (x[i - 1] < 0.0 && x[i] >= 0.0) crossings.push_back(dt * (i - 1 + x[i - 1] / (x[i - 1] - x[i])));
  REQUIRE(crossings.size() >= 2);
  return (crossings.back() - crossings.front()) / static_cast<double>(crossings.size() - 1);
}

}  // namespace

TEST_CASE("equilibrium start stays put") {
  MdConfig cfg;
  cfg.masses = {reduced_mass(atomic_mass("Li"), atomic_mass("H"))};
  cfg.dof_per_atom = 1;
  cfg.positions = {MorseParams{}.r_eq};
  cfg.steps = 1000;
  const auto t = velocity_verlet_run(morse_bond_provider(MorseParams{}), cfg);
  CHECK(t.size() == 1001);
  for (const auto& x : t.positions) CHECK(std::abs(x[0] - MorseParams{}.r_eq) < 1e-10);
}

TEST_CASE("harmonic period") {
  const double k = 5.0, m = 2.0;
  const double period = 2.0 * std::numbers::pi * std::sqrt(m / (k * kForceToAccel));
  MdConfig cfg;
  cfg.masses = {m};
  cfg.dof_per_atom = 1;
  cfg.positions = {0.1};
  cfg.velocities = {0.0};
  cfg.dt = period / 1000.0;
  cfg.steps = 10000;
  const auto t = velocity_verlet_run(harmonic(k), cfg);
  const auto x = distance_series(t, 1);
  CHECK(measured_period(x, cfg.dt) == doctest::Approx(period).epsilon(1e-3));
}

TEST_CASE("Morse energy conservation and time reversal") {
  MdConfig cfg;
  cfg.masses = {reduced_mass(atomic_mass("Li"), atomic_mass("H"))};
  cfg.dof_per_atom = 1;
  cfg.positions = {1.05};
  cfg.dt = 0.02;
  cfg.steps = 10000;
  const auto t = velocity_verlet_run(morse_bond_provider(MorseParams{}), cfg);
  CHECK(t.max_relative_drift() <= 1e-4);
  const auto r = distance_series(t, 1);
  CHECK(*std::min_element(r.begin(), r.end()) == doctest::Approx(1.05).epsilon(1e-3));
  CHECK(*std::max_element(r.begin(), r.end()) < 3.5);
  MdConfig back = cfg;
  back.steps = 2000;
  const auto fwd = velocity_verlet_run(morse_bond_provider(MorseParams{}), back);
  back.positions = fwd.positions.back();
  back.velocities = {-fwd.velocities.back()[0]};
  const auto rev = velocity_verlet_run(morse_bond_provider(MorseParams{}), back);
  CHECK(std::abs(rev.positions.back()[0] - 1.05) < 1e-8);
  CHECK(std::abs(rev.velocities.back()[0]) < 1e-8);
}

TEST_CASE("three-dimensional run with per-atom masses") {
  MdConfig cfg;
  cfg.masses = {1.0, 4.0};
  cfg.positions = {0.1, 0, 0, 0, 0.2, 0};
  cfg.steps = 200;
  cfg.record_every = 10;
  const auto t = velocity_verlet_run(harmonic(3.0), cfg);
  CHECK(t.size() == 21);
  CHECK(t.dt == doctest::Approx(1.0));
  CHECK(t.max_relative_drift() < 1e-4);
  const auto csv = t.to_csv();
  CHECK(csv.substr(0, 10) == "t_fs,x0,x1");
}

TEST_CASE("invalid configurations and failing forces") {
  MdConfig cfg;
  cfg.masses = {1.0};
  cfg.dof_per_atom = 1;
  cfg.positions = {0.0};
  cfg.dt = 0.0;
  CHECK_THROWS_AS(velocity_verlet_run(harmonic(1.0), cfg), ArgumentError);
  cfg.dt = 0.1;
  cfg.masses = {-1.0};
  CHECK_THROWS_AS(velocity_verlet_run(harmonic(1.0), cfg), ArgumentError);
  cfg.masses = {1.0};
  cfg.positions = {0.0, 1.0};
  CHECK_THROWS_AS(velocity_verlet_run(harmonic(1.0), cfg), ArgumentError);
  cfg.positions = {0.5};
  cfg.steps = 100;
  int calls = 0;
  ForceProvider flaky = [&](std::span<const double> x) {
    if (++calls == 5) throw DegenerateGeometryError("collapse");
    return harmonic(1.0)(x);
  };
  try {
    velocity_verlet_run(flaky, cfg);
    FAIL("expected failure");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("step 4") != std::string::npos);
  }
}

TEST_CASE("spectrum of a sinusoid") {
  const double dt = 0.5, f0 = 0.02;  // 1/fs
  std::vector<double> x(4000);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = 1.0 + std::sin(2 * std::numbers::pi * f0 * dt * i);
  const auto s = oscillation_spectrum(x, dt, 1);
  CHECK(std::abs(dominant_frequency(s) - f0 * 1000.0) <= s.bin_width);
  const auto s2 = oscillation_spectrum(x, dt, 2);
  CHECK(s2.bin_width == doctest::Approx(s.bin_width / 2));
  CHECK(s.frequency.size() == x.size() / 2 + 1);
  CHECK(s.magnitude[0] < 1e-3 * s.magnitude[40]);
  CHECK_THROWS_AS(oscillation_spectrum(std::vector<double>{}, dt, 1), ArgumentError);
  CHECK_THROWS_AS(oscillation_spectrum(x, dt, 0), ArgumentError);
  CHECK(s.to_csv().substr(0, 14) == "frequency_THz,");
}

TEST_CASE("re-uploading spectrum support") {
  for (int depth : {1, 2, 4}) {
    const auto t = qff::testing::make_template(1, depth, Entanglement::none, {});
    for (std::uint64_t s = 0; s < 3; ++s) {
      const auto th = qff::testing::uniform_vector(t.num_params(), -3, 3, 10 * depth + s);
      const auto c = qnn_model_spectrum(t, th, 0, 64);
      double outside = 0.0;
      for (std::size_t n = depth + 1; n < c.size(); ++n) outside += c[n] * c[n];
      CHECK(outside <= 1e-20);
    }
  }
  // Larger depth reaches a higher frequency for some parameters.
  for (int depth = 1; depth < 4; ++depth) {
    const auto t = qff::testing::make_template(1, depth + 1, Entanglement::none, {});
    double best = 0.0;
    for (std::uint64_t s = 0; s < 10; ++s) {
      const auto th = qff::testing::uniform_vector(t.num_params(), -3, 3, 100 + s);
      best = std::max(best, qnn_model_spectrum(t, th, 0, 64)[depth + 1]);
    }
    CHECK(best > 1e-3);
  }
  const auto t = qff::testing::make_template(1, 1, Entanglement::none, {});
  CHECK_THROWS_AS(qnn_model_spectrum(t, std::vector<double>(2, 0.0), 1, 64), ArgumentError);
}

TEST_CASE("tabulated masses") {
  CHECK(reduced_mass(atomic_mass("Li"), atomic_mass("H")) == doctest::Approx(0.8812).epsilon(1e-3));
  CHECK_THROWS_AS(atomic_mass("Xx"), ArgumentError);
}
