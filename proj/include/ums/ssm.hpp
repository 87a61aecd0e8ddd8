#pragma once

// Scalar linear-Gaussian state-space model
//
//   x_t     = h_t + e_t,                      e_t ~ N(0, w_t)
//   h_{t+1} = mu + phi (h_t - mu) + eta_t,    eta_t ~ N(0, sigma2)
//   h_1     ~ N(mu, sigma2 / (1 - phi^2))

#include <cstddef>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "ums/rng.hpp"

namespace ums {

struct ARParams {
  double mu = 0.0;
  double phi = 0.9;
  double sigma2 = 0.04;

  double stationary_variance() const { return sigma2 / (1.0 - phi * phi); }
  /// Throws std::invalid_argument on |phi| >= 1 or sigma2 <= 0.
  void validate() const;
};

struct PseudoObservations {
  std::vector<double> values;
  std::vector<double> variances;

  std::size_t size() const { return values.size(); }
  void validate() const;
};

using LatentPath = std::vector<double>;

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

LatentPath simulate_ar1(const ARParams& alpha, std::size_t n, Rng& rng);

/// Prediction-error decomposition of log p(x_1..x_n | alpha). Zero for n = 0.
double kalman_loglik(const PseudoObservations& obs, const ARParams& alpha);

/// Smoothed means E[h | x] (Rauch-Tung-Striebel backward pass).
std::vector<double> smoothed_mean(const PseudoObservations& obs, const ARParams& alpha);

/// Exact draw of h_1..h_n given x, by the mean-plus-simulated-residual
/// construction: h = E[h|x] + (h+ - E[h+|x+]) with (h+, x+) from the model.
LatentPath simulation_smoother(const PseudoObservations& obs, const ARParams& alpha, Rng& rng);

/// Dense references, O(n^3); refuse n > kMaxOracleSize.
inline constexpr std::size_t kMaxOracleSize = 50;

struct GaussianMoments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

GaussianMoments smoother_moments_oracle(const PseudoObservations& obs, const ARParams& alpha);
double dense_loglik_oracle(const PseudoObservations& obs, const ARParams& alpha);

}  // namespace ums
