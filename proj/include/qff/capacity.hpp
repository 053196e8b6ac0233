#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qff/train.hpp"

namespace qff {

struct FisherEstimate {
  Eigen::MatrixXd matrix;  // d x d
  std::size_t samples = 0;
  std::vector<double> theta;
};

// (1/K) sum_k g_k g_k^T with g_k = grad_theta f(theta; x_k).
FisherEstimate fisher_matrix(const DifferentiableRegressor& model, const std::vector<std::vector<double>>& inputs,
                             std::span<const double> theta);

// Parameter box [lower, upper]^d that Monte Carlo draws are taken from.
struct ParameterDomain {
  double lower = -3.141592653589793;
  double upper = 3.141592653589793;
  std::string describe() const;
  static ParameterDomain rotation_angles() { return {}; }
  static ParameterDomain unit_box() { return {-1.0, 1.0}; }
};

enum class FisherNormalization {
  none,   // F as estimated
  trace,  // F_hat = d F / E_theta[tr F]
};

const char* fisher_normalization_name(FisherNormalization n);
FisherNormalization parse_fisher_normalization(std::string_view s);

struct EffDimConfig {
  double n = 50.0;
  int draws = 100;
  std::uint64_t seed = 0;
  ParameterDomain domain;
  FisherNormalization normalization = FisherNormalization::none;
};

struct EffectiveDimensionReport {
  double n = 0.0;
  int num_params = 0;
  double d_n = 0.0;
  double normalized = 0.0;  // d_n / d
  double std_error = 0.0;   // jackknife, on d_n
  int draws = 0;
  std::size_t samples = 0;
  std::string domain;
  FisherNormalization normalization = FisherNormalization::none;

  std::string to_text() const;
};

// kappa = n / (2 pi ln n); throws ArgumentError unless kappa > 1.
double effdim_kappa(double n);

// d_n = 2 log(mean_theta sqrt det(I + kappa F(theta))) / log kappa, averaged in
// log space over `draws` uniform draws from the domain.
EffectiveDimensionReport effective_dimension(const DifferentiableRegressor& model,
                                             const std::vector<std::vector<double>>& inputs,
                                             const EffDimConfig& cfg);

// Same estimator on precomputed Fisher matrices (one per draw).
EffectiveDimensionReport effective_dimension_from_fisher(const std::vector<Eigen::MatrixXd>& fishers, double n,
                                                         FisherNormalization normalization);

}  // namespace qff
