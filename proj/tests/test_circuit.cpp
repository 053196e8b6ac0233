#include <doctest.h>

#include "qff/errors.hpp"
#include "qff/gradients.hpp"
#include "qff/statevec.hpp"
#include "test_util.hpp"

using namespace qff;
using qff::testing::make_template;
using qff::testing::uniform_vector;

TEST_CASE("pair sets per entanglement pattern") {
  CHECK(pair_set(4, Entanglement::linear).size() == 3);
  CHECK(pair_set(4, Entanglement::circular).size() == 4);
  CHECK(pair_set(4, Entanglement::full).size() == 6);
  CHECK(pair_set(4, Entanglement::none).empty());
  CHECK(pair_set(2, Entanglement::circular).size() == 1);
  CHECK(pair_set(1, Entanglement::circular).empty());
  const auto c = pair_set(3, Entanglement::circular);
  CHECK(c.back() == std::pair<int, int>{2, 0});
  CHECK(sliding_triples(6).size() == 4);
  CHECK(sliding_triples(2).empty());
  CHECK(parse_entanglement(entanglement_name(Entanglement::circular)) == Entanglement::circular);
  CHECK_THROWS_AS(parse_entanglement("star"), ArgumentError);
}

TEST_CASE("parameter count formula and preset values") {
  CHECK(make_template(3, 10, Entanglement::full, {{0, 1, 2}}).num_params() == 73);
  CHECK(make_template(3, 12, Entanglement::full, {{0, 1, 2}}).num_params() == 87);
  CHECK(make_template(6, 10, Entanglement::linear, sliding_triples(6)).num_params() == 156);
  for (int n = 1; n <= 5; ++n)
    for (int depth = 1; depth <= 4; ++depth)
      for (auto e : {Entanglement::none, Entanglement::linear, Entanglement::circular, Entanglement::full}) {
        const auto sets = sliding_triples(n);
        const auto t = make_template(n, depth, e, sets);
        const int expected = n + depth * (n + static_cast<int>(pair_set(n, e).size()) + static_cast<int>(sets.size()));
        CHECK(t.num_params() == expected);
      }
}

TEST_CASE("first trainable layer has rotations only") {
  AnsatzSpec a;
  a.num_qubits = 3;
  a.entanglement = Entanglement::full;
  a.degree_sets = {{0, 1, 2}};
  CHECK(layer_param_count(a, 0) == 3);
  CHECK(layer_param_count(a, 1) == 7);
  for (const auto& g : trainable_layer(a, 0)) CHECK(g.kind == GateKind::RY);
}

TEST_CASE("encoding features of one stage") {
  const auto t = make_template(3, 2, Entanglement::full, {{0, 1, 2}});
  const auto f = t.encoding_features();
  REQUIRE(f.size() == 7);
  CHECK(f[0].indices == std::vector<int>{0});
  CHECK(f[3].indices == std::vector<int>{0, 1});
  CHECK(f[6].indices == std::vector<int>{0, 1, 2});
  const std::vector<double> y{0.5, -2.0, 3.0};
  CHECK(f[6].evaluate(y) == doctest::Approx(-3.0));
  CHECK(f[6].partial(y, 1) == doctest::Approx(1.5));
  CHECK(f[3].partial(y, 2) == 0.0);
  CHECK(t.encoding_gates().size() == 14);
}

TEST_CASE("bound angles follow inputs and parameters") {
  const auto t = make_template(2, 1, Entanglement::linear, {});
  const std::vector<double> y{0.3, -0.7};
  const auto theta = uniform_vector(t.num_params(), -1, 1, 3);
  const auto g = qff::bind(t, y, theta);
  REQUIRE(g.size() == t.gates().size());
  // U_0: RY(theta_0), RY(theta_1); Phi: RY(y0), RY(y1), ZZ(y0 y1); U_1 ...
  CHECK(g[0].angle == theta[0]);
  CHECK(g[2].angle == y[0]);
  CHECK(g[4].kind == GateKind::MULTIZ);
  CHECK(g[4].angle == doctest::Approx(y[0] * y[1]));
  CHECK_THROWS_AS(qff::bind(t, std::vector<double>{0.1}, theta), ArgumentError);
  CHECK_THROWS_AS(qff::bind(t, y, std::vector<double>{0.1}), ArgumentError);
}

TEST_CASE("zero parameters reduce the circuit to the encoding") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto t = make_template(3, 1 + static_cast<int>(s % 4), Entanglement::full, {{0, 1, 2}});
    const auto y = uniform_vector(3, -3, 3, s);
    const std::vector<double> theta(t.num_params(), 0.0);
    const auto enc = bind_encoding_only(t, y);
    const double ref = expectation_z(run_circuit(init_zero(3), enc), 0);
    CHECK(std::abs(eval_qnn(t, y, theta) - ref) <= 1e-12);
  }
}

TEST_CASE("template text round trip and corruption") {
  const auto t = make_template(4, 3, Entanglement::circular, {{0, 1, 2}, {1, 2, 3}});
  const auto text = t.to_text();
  const auto back = QnnTemplate::from_text(text);
  CHECK(back.gates() == t.gates());
  CHECK(back.num_params() == t.num_params());
  CHECK(back.to_text() == text);
  auto broken = text;
  const auto pos = broken.find("RY");
  REQUIRE(pos != std::string::npos);
  broken.replace(pos, 2, "RZ");
  CHECK_THROWS_AS(QnnTemplate::from_text(broken), ParseError);
  CHECK(format_degree_sets(parse_degree_sets("0,1,2 1,2,3")) == "0,1,2 1,2,3");
}

TEST_CASE("invalid layouts are rejected") {
  CHECK_THROWS_AS(make_template(3, 0, Entanglement::full, {}), ArgumentError);
  CHECK_THROWS_AS(make_template(3, 1, Entanglement::full, {{0, 3}}), ArgumentError);
  CHECK_THROWS_AS(make_template(3, 1, Entanglement::full, {{1, 1}}), ArgumentError);
  CHECK_THROWS_AS(make_template(0, 1, Entanglement::full, {}), ArgumentError);
}
