#include "qff/capacity.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "qff/errors.hpp"
#include "qff/textio.hpp"

namespace qff {

FisherEstimate fisher_matrix(const DifferentiableRegressor& model, const std::vector<std::vector<double>>& inputs,
                             std::span<const double> theta) {
  if (inputs.empty()) throw ArgumentError("Fisher estimate needs at least one input");
  const int d = model.num_params();
  if (static_cast<int>(theta.size()) != d) throw ArgumentError("parameter vector length does not match the model");
  FisherEstimate est;
  est.matrix = Eigen::MatrixXd::Zero(d, d);
  for (const auto& x : inputs) {
    const auto g = model.param_gradient(theta, x);
    const Eigen::Map<const Eigen::VectorXd> gv(g.data(), d);
    est.matrix.selfadjointView<Eigen::Lower>().rankUpdate(gv);
  }
  est.matrix = est.matrix.selfadjointView<Eigen::Lower>();
  est.matrix /= static_cast<double>(inputs.size());
  est.samples = inputs.size();
  est.theta.assign(theta.begin(), theta.end());
  return est;
}

std::string ParameterDomain::describe() const {
  return "[" + text::format_double(lower) + ", " + text::format_double(upper) + "]^d";
}

const char* fisher_normalization_name(FisherNormalization n) {
  return n == FisherNormalization::trace ? "trace" : "none";
}

FisherNormalization parse_fisher_normalization(std::string_view s) {
  if (s == "none") return FisherNormalization::none;
  if (s == "trace") return FisherNormalization::trace;
  throw ArgumentError("unknown Fisher normalization '" + std::string(s) + "' (none|trace)");
}

double effdim_kappa(double n) {
  if (!(n >= 2.0)) throw ArgumentError("effective dimension needs n >= 2");
  const double kappa = n / (2.0 * std::numbers::pi * std::log(n));
  if (!(kappa > 1.0)) {
    throw ArgumentError("n = " + text::format_double(n) + " gives kappa = " + text::format_double(kappa) +
                        " <= 1; the effective dimension is undefined");
  }
  return kappa;
}

namespace {

double half_logdet(const Eigen::MatrixXd& f, double kappa) {
  const Eigen::Index d = f.rows();
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(d, d) + kappa * f;
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) return std::numeric_limits<double>::quiet_NaN();
  const auto diag = llt.matrixLLT().diagonal();
  double s = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) s += std::log(diag(i));
  return s;  // log det(A) / 2
}

double log_mean_exp(std::span<const double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s / static_cast<double>(v.size()));
}

}  // namespace

EffectiveDimensionReport effective_dimension_from_fisher(const std::vector<Eigen::MatrixXd>& fishers, double n,
                                                         FisherNormalization normalization) {
  if (fishers.empty()) throw ArgumentError("effective dimension needs at least one parameter draw");
  const double kappa = effdim_kappa(n);
  const Eigen::Index d = fishers.front().rows();
  double scale = 1.0;
  if (normalization == FisherNormalization::trace) {
    double mean_trace = 0.0;
    for (const auto& f : fishers) mean_trace += f.trace();
    mean_trace /= static_cast<double>(fishers.size());
    scale = mean_trace > 0.0 ? static_cast<double>(d) / mean_trace : 0.0;
  }
  std::vector<double> terms(fishers.size());
  for (std::size_t m = 0; m < fishers.size(); ++m) {
    terms[m] = half_logdet(scale * fishers[m], kappa);
    if (!std::isfinite(terms[m])) {
      throw NumericalError("non-finite log-determinant at parameter draw " + std::to_string(m));
    }
  }
  const double log_kappa = std::log(kappa);
  EffectiveDimensionReport r;
  r.n = n;
  r.num_params = static_cast<int>(d);
  r.draws = static_cast<int>(fishers.size());
  r.normalization = normalization;
  r.d_n = 2.0 * log_mean_exp(terms) / log_kappa;
  r.normalized = d > 0 ? r.d_n / static_cast<double>(d) : 0.0;
  const std::size_t M = terms.size();
  if (M > 1) {
    std::vector<double> loo(M), rest(M - 1);
    double mean = 0.0;
    for (std::size_t i = 0; i < M; ++i) {
      std::size_t k = 0;
      for (std::size_t j = 0; j < M; ++j)
        if (j != i) rest[k++] = terms[j];
      loo[i] = 2.0 * log_mean_exp(rest) / log_kappa;
      mean += loo[i];
    }
    mean /= static_cast<double>(M);
    double ss = 0.0;
    for (double v : loo) ss += (v - mean) * (v - mean);
    r.std_error = std::sqrt(static_cast<double>(M - 1) / static_cast<double>(M) * ss);
  }
  return r;
}

EffectiveDimensionReport effective_dimension(const DifferentiableRegressor& model,
                                             const std::vector<std::vector<double>>& inputs,
                                             const EffDimConfig& cfg) {
  if (cfg.draws < 1) throw ArgumentError("effective dimension needs at least one parameter draw");
  if (!(cfg.domain.upper > cfg.domain.lower)) throw ArgumentError("empty parameter domain");
  effdim_kappa(cfg.n);
  const int d = model.num_params();
  std::vector<Eigen::MatrixXd> fishers;
  fishers.reserve(cfg.draws);
  std::vector<double> theta(d);
  for (int m = 0; m < cfg.draws; ++m) {
    // One substream per draw so any draw can be reproduced on its own.
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                      static_cast<std::uint32_t>(m)};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> u(cfg.domain.lower, cfg.domain.upper);
    for (double& t : theta) t = u(rng);
    fishers.push_back(fisher_matrix(model, inputs, theta).matrix);
    if (!fishers.back().allFinite()) {
      throw NumericalError("non-finite Fisher matrix at parameter draw " + std::to_string(m) +
                           ", theta = " + text::join_doubles(theta));
    }
  }
  auto r = effective_dimension_from_fisher(fishers, cfg.n, cfg.normalization);
  r.samples = inputs.size();
  r.domain = cfg.domain.describe();
  return r;
}

std::string EffectiveDimensionReport::to_text() const {
  std::ostringstream os;
  os << "effdim.n = " << text::format_double(n) << '\n';
  os << "effdim.d = " << num_params << '\n';
  os << "effdim.d_n = " << text::format_double(d_n) << '\n';
  os << "effdim.normalized = " << text::format_double(normalized) << '\n';
  os << "effdim.std_error = " << text::format_double(std_error) << '\n';
  os << "effdim.draws = " << draws << '\n';
  os << "effdim.samples = " << samples << '\n';
  os << "effdim.domain = " << domain << '\n';
  os << "effdim.normalization = " << fisher_normalization_name(normalization) << '\n';
  return os.str();
}

}  // namespace qff
