#include <doctest.h>

#include <cmath>

#include "qff/baseline.hpp"
#include "qff/errors.hpp"
#include "qff/presets.hpp"
#include "test_util.hpp"

using namespace qff;
using qff::testing::central_diff;
using qff::testing::uniform_vector;

namespace {

MlpModel random_mlp(std::vector<int> widths, std::uint64_t seed) {
  MlpSpec s;
  s.widths = std::move(widths);
  s.seed = seed;
  auto m = mlp_init_xavier(s);
  m.params = uniform_vector(m.params.size(), -1.0, 1.0, seed + 1);
  return m;
}

}  // namespace

TEST_CASE("parameter count convention") {
  MlpSpec s;
  s.widths = {7, 4, 5, 2, 1};
  CHECK(s.num_params() == 72);
  s.widths = {7, 4, 6, 2, 2, 1};
  CHECK(s.num_params() == 85);
  s.widths = {6, 14, 2, 1};
  CHECK(s.num_params() == 131);
  CHECK(MlpSpec::parse("[7,4,5,2,1]").widths == std::vector<int>{7, 4, 5, 2, 1});
  CHECK(MlpSpec::parse("[3,2,1]").to_string() == "[3,2,1]");
  CHECK_THROWS_AS(MlpSpec::parse("[3,1]"), ArgumentError);
  CHECK_THROWS_AS(MlpSpec::parse("[3,2,2]"), ArgumentError);
}

TEST_CASE("Xavier initialization") {
  MlpSpec s;
  s.widths = {7, 4, 5, 2, 1};
  s.seed = 11;
  const auto m = mlp_init_xavier(s);
  REQUIRE(m.num_params() == 72);
  std::size_t off = 0;
  for (std::size_t l = 1; l < s.widths.size(); ++l) {
    const int in = s.widths[l - 1], out = s.widths[l];
    const double bound = std::sqrt(6.0 / (in + out));
    for (int i = 0; i < in * out; ++i) CHECK(std::abs(m.params[off + i]) <= bound);
    for (int i = 0; i < out; ++i) CHECK(m.params[off + in * out + i] == 0.0);
    off += in * out + out;
  }
  CHECK(mlp_init_xavier(s).params == m.params);
  s.seed = 12;
  CHECK(mlp_init_xavier(s).params != m.params);
}

TEST_CASE("forward pass") {
  MlpSpec s;
  s.widths = {3, 4, 1};
  MlpModel zero{s, std::vector<double>(s.num_params(), 0.0)};
  CHECK(mlp_forward(zero, std::vector<double>{1.0, -2.0, 0.5}) == 0.0);
  // One hidden unit: f = v tanh(w x + b) + c
  MlpSpec one;
  one.widths = {1, 1, 1};
  MlpModel m{one, {0.7, -0.2, 1.5, 0.3}};
  CHECK(mlp_forward(m, std::vector<double>{0.4}) == doctest::Approx(1.5 * std::tanh(0.7 * 0.4 - 0.2) + 0.3));
  CHECK_THROWS_AS(mlp_forward(m, std::vector<double>{0.4, 1.0}), ArgumentError);
}

TEST_CASE("backward pass matches finite differences for several depths") {
  for (const auto& widths : std::vector<std::vector<int>>{{2, 3, 1}, {3, 4, 2, 1}, {7, 4, 5, 2, 1}, {2, 3, 3, 3, 3, 1}}) {
    const auto m = random_mlp(widths, widths.size());
    const auto x = uniform_vector(widths[0], -1.0, 1.0, 77);
    const auto g = mlp_backward(m, x);
    CHECK(g.value == mlp_forward(m, x));
    auto fp = [&](const std::vector<double>& p) { return mlp_forward(MlpModel{m.spec, p}, x); };
    for (std::size_t i = 0; i < m.params.size(); ++i) CHECK(std::abs(g.d_params[i] - central_diff(fp, m.params, i, 1e-5)) < 1e-7);
    auto fx = [&](const std::vector<double>& z) { return mlp_forward(m, z); };
    for (std::size_t j = 0; j < x.size(); ++j) CHECK(std::abs(g.d_inputs[j] - central_diff(fx, x, j, 1e-5)) < 1e-7);
    const auto h = mlp_mixed_hessian(m, x);
    for (std::size_t j = 0; j < x.size(); ++j) {
      auto xp = x, xm = x;
      xp[j] += 1e-5;
      xm[j] -= 1e-5;
      const auto gp = mlp_backward(m, xp).d_params, gm = mlp_backward(m, xm).d_params;
      for (std::size_t i = 0; i < m.params.size(); ++i) CHECK(std::abs(h[i][j] - (gp[i] - gm[i]) / 2e-5) < 1e-7);
    }
  }
}

TEST_CASE("regressor on expanded encoding features") {
  const auto tmpl = get_preset("lih").make_template();
  const auto expansion = tmpl.encoding_features();
  MlpSpec s;
  s.widths = {7, 4, 5, 2, 1};
  const MlpRegressor reg(s, expansion);
  CHECK(reg.num_inputs() == 3);
  const auto th = uniform_vector(s.num_params(), -1, 1, 5);
  const auto y = uniform_vector(3, -1, 1, 6);
  const auto z = reg.expand(y);
  CHECK(z[6] == doctest::Approx(y[0] * y[1] * y[2]));
  auto fy = [&](const std::vector<double>& v) { return reg.value(th, v); };
  const auto gy = reg.input_gradient(th, y);
  for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(gy[j] - central_diff(fy, y, j, 1e-5)) < 1e-8);
  const auto h = reg.mixed_hessian(th, y);
  for (std::size_t j = 0; j < 3; ++j) {
    auto yp = y, ym = y;
    yp[j] += 1e-5;
    ym[j] -= 1e-5;
    const auto gp = reg.param_gradient(th, yp), gm = reg.param_gradient(th, ym);
    for (std::size_t i = 0; i < th.size(); ++i) CHECK(std::abs(h[i][j] - (gp[i] - gm[i]) / 2e-5) < 1e-7);
  }
  CHECK_THROWS_AS(MlpRegressor(s, std::vector<InputExpr>(3)), ArgumentError);
}

TEST_CASE("topology search") {
  const auto found = topology_search(73, 7, 5, 3);
  CHECK(found.num_params() >= 71);
  CHECK(found.num_params() <= 75);
  CHECK(found.widths.front() == 7);
  CHECK(found.widths.back() == 1);
  CHECK(topology_search(73, 7, 5, 3).widths == found.widths);
  const auto all = feasible_topologies(73, 7);
  bool has_reference = false;
  for (const auto& s : all) {
    CHECK(std::abs(s.num_params() - 73) <= 2);
    CHECK(s.widths.size() <= 6);
    has_reference = has_reference || s.widths == std::vector<int>{7, 4, 5, 2, 1};
  }
  CHECK(has_reference);
  int calls = 0;
  const auto single = topology_search(73, 7, 1, 9, [&](const MlpSpec&) {
    ++calls;
    return 0.0;
  });
  CHECK(calls == 1);
  CHECK(single.widths == topology_search(73, 7, 1, 9).widths);
  const auto best = topology_search(73, 7, 6, 2, [](const MlpSpec& s) { return static_cast<double>(s.widths.size()); });
  CHECK(best.widths.size() <= 6);
  CHECK_THROWS_AS(topology_search(1, 7, 3, 0), ArgumentError);
}

TEST_CASE("a one-unit network learns a representable curve") {
  // E = 0.5 tanh(1.2 s) with s the min-max scaled bond over [1, 1.55].
  Dataset d;
  d.elements = {"Li", "H"};
  for (int i = 0; i < 12; ++i) {
    const double r = 1.0 + 0.05 * i, s = 2.0 * (r - 1.0) / 0.55 - 1.0;
    const double t = std::tanh(1.2 * s), de = 0.5 * 1.2 * (1.0 - t * t) * 2.0 / 0.55;
    d.samples.push_back({{0, 0, 0, r, 0, 0}, 0.5 * t, std::vector<double>{de, 0, 0, -de, 0, 0}});
  }
  DescriptorPipeline pipe(2, {InternalCoordinate::bond(0, 1)}, {{0, Nonlinearity::identity}});
  MlpSpec s;
  s.widths = {1, 1, 1};
  s.seed = 1;
  InputExpr e;
  e.indices = {0};
  auto m = initialize_mlp(s, {e}, pipe, d);
  AdamConfig cfg;
  cfg.learning_rate = 0.02;
  cfg.max_steps = 3000;
  cfg.stop_on_convergence = false;
  auto [fit, rep] = mlp_adam_fit(m, d, {0.0}, cfg);
  CHECK(rep.train.energy_scaled < 2e-3);
  CHECK(rep.train.force_scaled < 2e-2);
}

TEST_CASE("MLP checkpoint round trip") {
  const auto p = get_preset("lih");
  GenOptions opt;
  opt.count = 15;
  const auto d = generate_dataset(p, opt);
  MlpSpec s;
  s.widths = {7, 4, 5, 2, 1};
  s.seed = 4;
  auto m = initialize_mlp(s, p.make_template().encoding_features(), p.make_pipeline(), d);
  m.metadata["preset"] = "lih";
  const auto text = mlp_to_text(m);
  const auto back = mlp_from_text(text);
  CHECK(back.mlp.params == m.mlp.params);
  CHECK(back.expansion == m.expansion);
  CHECK(mlp_to_text(back) == text);
  const auto a = predict(m, d.geometry(3)), b = predict(back, d.geometry(3));
  CHECK(a.energy == b.energy);
  CHECK(a.forces == b.forces);
  CHECK_THROWS_AS(mlp_from_text(text.substr(0, text.size() - 20)), ParseError);
  const auto rmse = evaluate_rmse(m, d, true);
  CHECK(rmse.samples == d.size());
}
