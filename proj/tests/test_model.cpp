#include <doctest.h>

#include <fstream>

#include "qff/errors.hpp"
#include "qff/gradients.hpp"
#include "qff/model.hpp"
#include "qff/presets.hpp"
#include "test_util.hpp"

using namespace qff;
using qff::testing::rigid_motion;
using qff::testing::uniform_vector;

namespace {

QffModel water_model(std::uint64_t seed) {
  const auto p = get_preset("h2o");
  GenOptions opt;
  opt.count = 30;
  opt.seed = seed;
  const auto data = generate_dataset(p, opt);
  auto pipe = p.make_pipeline();
  pipe.fit(data.geometries());
  QffModel m;
  m.tmpl = qff::testing::make_template(3, 2, Entanglement::full, {{0, 1, 2}});
  m.pipeline = pipe;
  m.theta = uniform_vector(m.tmpl.num_params(), -2, 2, seed);
  m.labels = LabelScaler::fit(data.energies());
  m.metadata = {{"preset", "h2o"}};
  return m;
}

MoleculeGeometry water(double r1, double r2, double th) {
  return {{"O", "H", "H"}, {0.01, -0.02, 0.03, r1, 0, 0, r2 * std::cos(th), r2 * std::sin(th), 0.1}};
}

}  // namespace

TEST_CASE("label scaling maps the training range onto +-0.9") {
  const std::vector<double> e{-3.0, 1.0, 5.0};
  const auto s = LabelScaler::fit(e);
  CHECK(s.to_scaled(-3.0) == doctest::Approx(-0.9));
  CHECK(s.to_scaled(5.0) == doctest::Approx(0.9));
  CHECK(s.to_energy(s.to_scaled(1.7)) == doctest::Approx(1.7));
  CHECK(s.scale > 0.0);
  CHECK_THROWS_AS(LabelScaler::fit(std::vector<double>{}), DataError);
}

TEST_CASE("forces equal minus the finite-difference energy gradient") {
  const auto m = water_model(1);
  for (int k = 0; k < 5; ++k) {
    const auto g = water(0.9 + 0.03 * k, 1.0 - 0.02 * k, 1.7 + 0.05 * k);
    const auto f = predict_forces(m, g);
    for (std::size_t c = 0; c < g.cartesian.size(); ++c) {
      auto a = g, b = g;
      a.cartesian[c] += 1e-5;
      b.cartesian[c] -= 1e-5;
      const double fd = -(predict_energy(m, a) - predict_energy(m, b)) / 2e-5;
      CHECK(std::abs(fd - f[c]) < 1e-5);
    }
  }
}

TEST_CASE("net force vanishes and predictions are rigid-motion invariant") {
  const auto m = water_model(2);
  const auto g = water(0.95, 1.02, 1.8);
  const auto p = predict(m, g);
  for (int c = 0; c < 3; ++c) CHECK(std::abs(p.forces[c] + p.forces[3 + c] + p.forces[6 + c]) < 1e-10);
  const Eigen::Vector3d axis(0.2, 0.5, -1.0);
  const double angle = 0.8;
  const auto moved = rigid_motion(g, axis, angle, {3.0, -1.0, 2.0});
  const auto q = predict(m, moved);
  CHECK(std::abs(p.energy - q.energy) < 1e-9);
  const Eigen::Matrix3d r = Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
  for (int a = 0; a < 3; ++a) {
    const Eigen::Vector3d fa(p.forces[3 * a], p.forces[3 * a + 1], p.forces[3 * a + 2]);
    const Eigen::Vector3d rot = r * fa;
    for (int c = 0; c < 3; ++c) CHECK(std::abs(rot[c] - q.forces[3 * a + c]) < 1e-8);
  }
}

TEST_CASE("diatomic forces act along the bond only") {
  const auto p = get_preset("lih");
  QffModel m;
  m.tmpl = p.make_template();
  m.pipeline = p.make_pipeline();
  m.pipeline.set_scalers({{0.9, 8.1}});
  m.theta = uniform_vector(m.tmpl.num_params(), -1, 1, 3);
  m.labels = {1.5, 0.2};
  const MoleculeGeometry g{{"Li", "H"}, {0, 0, 0, 0.6, 1.0, 1.2}};
  const auto f = predict_forces(m, g);
  const Eigen::Vector3d axis = (g.atom(1) - g.atom(0)).normalized();
  const Eigen::Vector3d f1(f[3], f[4], f[5]);
  CHECK((f1 - f1.dot(axis) * axis).norm() < 1e-12);
  for (int c = 0; c < 3; ++c) CHECK(f[c] == doctest::Approx(-f[3 + c]));
}

TEST_CASE("zero parameters give the scaled encoding-only output") {
  auto m = water_model(4);
  std::fill(m.theta.begin(), m.theta.end(), 0.0);
  const auto g = water(0.97, 0.93, 1.9);
  const auto y = m.pipeline.apply(g);
  const double enc = expectation_z(run_circuit(init_zero(3), bind_encoding_only(m.tmpl, y)), 0);
  CHECK(std::abs(predict_energy(m, g) - (m.labels.scale * enc + m.labels.offset)) < 1e-12);
}

TEST_CASE("checkpoint round trip reproduces predictions bit for bit") {
  const auto m = water_model(5);
  const auto dir = qff::testing::temp_dir("model");
  const auto path = (dir / "m.qff").string();
  save_checkpoint(m, path);
  CHECK(checkpoint_family(path) == "qnn");
  const auto back = load_checkpoint(path);
  CHECK(back.theta == m.theta);
  CHECK(back.metadata == m.metadata);
  const auto g = water(0.9, 1.05, 1.75);
  const auto a = predict(m, g), b = predict(back, g);
  CHECK(a.energy == b.energy);
  CHECK(a.forces == b.forces);
}

TEST_CASE("malformed checkpoints fail with diagnostics") {
  const auto m = water_model(6);
  const auto text = model_to_text(m);
  SUBCASE("truncated") {
    const auto cut = text.substr(0, text.size() / 2);
    CHECK_THROWS_AS(model_from_text(cut), ParseError);
  }
  SUBCASE("version mismatch") {
    auto v = text;
    v.replace(v.find("checkpoint.version = 1"), 22, "checkpoint.version = 9");
    try {
      model_from_text(v);
      FAIL("expected an error");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("unsupported checkpoint version") != std::string::npos);
      CHECK(e.line() == 2);
    }
  }
  SUBCASE("bad number") {
    auto v = text;
    const auto pos = v.find("model.theta = ");
    v.insert(pos + 14, "x");
    CHECK_THROWS_AS(model_from_text(v), ParseError);
  }
  SUBCASE("parameter count") {
    auto v = text;
    const auto pos = v.find("model.theta = ");
    v.insert(pos + 14, "0.5 ");
    CHECK_THROWS_AS(model_from_text(v), ParseError);
  }
  SUBCASE("missing file") { CHECK_THROWS_AS(load_checkpoint("/nonexistent/qff.ckpt"), DataError); }
}
