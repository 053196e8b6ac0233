#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>

#include "qff/baseline.hpp"
#include "qff/capacity.hpp"
#include "qff/errors.hpp"
#include "test_util.hpp"

using namespace qff;
using qff::testing::uniform_vector;

namespace {

class ConstantModel final : public DifferentiableRegressor {
 public:
  int num_params() const override { return 4; }
  int num_inputs() const override { return 1; }
  double value(std::span<const double>, std::span<const double>) const override { return 0.3; }
  std::vector<double> param_gradient(std::span<const double>, std::span<const double>) const override {
    return std::vector<double>(4, 0.0);
  }
  std::vector<double> input_gradient(std::span<const double>, std::span<const double>) const override { return {0.0}; }
  std::vector<std::vector<double>> mixed_hessian(std::span<const double>, std::span<const double>) const override {
    return std::vector<std::vector<double>>(4, std::vector<double>(1, 0.0));
  }
};

std::vector<std::vector<double>> random_inputs(int k, int n, std::uint64_t seed) {
  std::vector<std::vector<double>> out;
  for (int i = 0; i < k; ++i) out.push_back(uniform_vector(n, -1.0, 1.0, seed + i));
  return out;
}

}  // namespace

TEST_CASE("Fisher matrix structure") {
  const auto t = qff::testing::make_template(2, 2, Entanglement::linear, {});
  const QnnRegressor reg(t);
  const auto th = uniform_vector(t.num_params(), -3, 3, 1);
  const auto one = fisher_matrix(reg, random_inputs(1, 2, 5), th);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(one.matrix);
  int rank = 0;
  for (int i = 0; i < es.eigenvalues().size(); ++i) rank += es.eigenvalues()[i] > 1e-10;
  CHECK(rank == 1);

  const auto inputs = random_inputs(6, 2, 9);
  const auto f = fisher_matrix(reg, inputs, th);
  CHECK((f.matrix - f.matrix.transpose()).cwiseAbs().maxCoeff() == 0.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es6(f.matrix);
  CHECK(es6.eigenvalues().minCoeff() >= -1e-10);
  int rank6 = 0;
  for (int i = 0; i < es6.eigenvalues().size(); ++i) rank6 += es6.eigenvalues()[i] > 1e-10;
  CHECK(rank6 <= 6);
  double trace = 0.0;
  for (const auto& x : inputs) {
    const auto g = reg.param_gradient(th, x);
    for (double v : g) trace += v * v / inputs.size();
  }
  CHECK(f.matrix.trace() == doctest::Approx(trace).epsilon(1e-12));
  CHECK(f.samples == 6);

  const ConstantModel c;
  CHECK(fisher_matrix(c, inputs, std::vector<double>(4, 0.0)).matrix.cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(fisher_matrix(reg, {}, th), ArgumentError);
}

TEST_CASE("effective dimension closed forms") {
  const ConstantModel c;
  EffDimConfig cfg;
  cfg.n = 100;
  cfg.draws = 5;
  const auto zero = effective_dimension(c, random_inputs(3, 1, 1), cfg);
  CHECK(zero.d_n == 0.0);
  CHECK(zero.normalized == 0.0);

  // F = I in d = 3 at n = 100.
  const double kappa = 100.0 / (2.0 * std::numbers::pi * std::log(100.0));
  const double expected = 3.0 * std::log(1.0 + kappa) / std::log(kappa);
  CHECK(expected == doctest::Approx(3.6148).epsilon(1e-4));
  const auto r = effective_dimension_from_fisher({Eigen::MatrixXd::Identity(3, 3)}, 100.0, FisherNormalization::none);
  CHECK(r.d_n == doctest::Approx(expected).epsilon(1e-12));
  const auto many =
      effective_dimension_from_fisher(std::vector<Eigen::MatrixXd>(7, 2.0 * Eigen::MatrixXd::Identity(3, 3)), 100.0,
                                      FisherNormalization::trace);
  CHECK(many.d_n == doctest::Approx(expected).epsilon(1e-12));
  CHECK(many.std_error == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(effdim_kappa(100.0) == doctest::Approx(kappa));
}

TEST_CASE("domain errors") {
  CHECK_THROWS_AS(effdim_kappa(10.0), ArgumentError);
  CHECK_THROWS_AS(effdim_kappa(1.0), ArgumentError);
  const ConstantModel c;
  EffDimConfig cfg;
  cfg.n = 5;
  CHECK_THROWS_AS(effective_dimension(c, random_inputs(2, 1, 1), cfg), ArgumentError);
  cfg.n = 100;
  cfg.draws = 0;
  CHECK_THROWS_AS(effective_dimension(c, random_inputs(2, 1, 1), cfg), ArgumentError);
  CHECK_THROWS_AS(parse_fisher_normalization("sqrt"), ArgumentError);
}

TEST_CASE("Monte Carlo estimate is stable when draws double") {
  const auto t = qff::testing::make_template(2, 2, Entanglement::linear, {});
  const QnnRegressor reg(t);
  const auto inputs = random_inputs(10, 2, 3);
  EffDimConfig cfg;
  cfg.n = 50;
  cfg.draws = 40;
  cfg.seed = 8;
  const auto a = effective_dimension(reg, inputs, cfg);
  cfg.draws = 80;
  const auto b = effective_dimension(reg, inputs, cfg);
  CHECK(a.std_error > 0.0);
  CHECK(std::abs(a.d_n - b.d_n) < 3.0 * std::max(a.std_error, b.std_error));
  CHECK(a.d_n >= 0.0);
  CHECK(a.normalized == doctest::Approx(a.d_n / t.num_params()));
  cfg.draws = 40;
  CHECK(effective_dimension(reg, inputs, cfg).d_n == a.d_n);
  const auto text = a.to_text();
  CHECK(text.find("effdim.normalization = none") != std::string::npos);
  CHECK(text.find("effdim.domain = [-3.141592653589793, 3.141592653589793]^d") != std::string::npos);
}

TEST_CASE("draws are reproducible one at a time") {
  MlpSpec s;
  s.widths = {2, 3, 1};
  InputExpr a, b;
  a.indices = {0};
  b.indices = {1};
  const MlpRegressor reg(s, {a, b});
  EffDimConfig cfg;
  cfg.n = 60;
  cfg.draws = 3;
  cfg.domain = ParameterDomain::unit_box();
  const auto r1 = effective_dimension(reg, random_inputs(5, 2, 1), cfg);
  const auto r2 = effective_dimension(reg, random_inputs(5, 2, 1), cfg);
  CHECK(r1.d_n == r2.d_n);
  CHECK(r1.domain == "[-1, 1]^d");
}
