#include "ums/ssm.hpp"

#include <cmath>
#include <string>

#include "ums/numeric.hpp"

namespace ums {

void ARParams::validate() const {
  if (!std::isfinite(mu)) throw std::invalid_argument("AR parameter mu must be finite");
  if (!(std::abs(phi) < 1.0)) throw std::invalid_argument("stationarity violation: |phi| >= 1 (phi = " + std::to_string(phi) + ")");
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw std::invalid_argument("AR parameter sigma2 must be positive");
}

void PseudoObservations::validate() const {
  if (values.size() != variances.size()) throw std::invalid_argument("pseudo-observation values and variances differ in length");
  for (double w : variances)
    if (!(w > 0.0)) throw std::invalid_argument("pseudo-observation variances must be positive");
}

LatentPath simulate_ar1(const ARParams& alpha, std::size_t n, Rng& rng) {
  alpha.validate();
  if (n == 0) throw std::invalid_argument("simulate_ar1 requires n >= 1");
  LatentPath h(n);
  const double sd = std::sqrt(alpha.sigma2);
  h[0] = alpha.mu + std::sqrt(alpha.stationary_variance()) * std_normal(rng);
  for (std::size_t t = 1; t < n; ++t) h[t] = alpha.mu + alpha.phi * (h[t - 1] - alpha.mu) + sd * std_normal(rng);
  return h;
}

double kalman_loglik(const PseudoObservations& obs, const ARParams& alpha) {
  alpha.validate();
  const std::size_t n = obs.size();
  double a = alpha.mu;
  double p = alpha.stationary_variance();
  double ll = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const double w = obs.variances[t];
    const double f = p + w;
    const double v = obs.values[t] - a;
    ll -= 0.5 * (kLogTwoPi + std::log(f) + v * v / f);
    const double a_filt = a + p / f * v;
    const double p_filt = p * w / f;
    a = alpha.mu + alpha.phi * (a_filt - alpha.mu);
    p = alpha.phi * alpha.phi * p_filt + alpha.sigma2;
  }
  if (!std::isfinite(ll)) throw NumericalError("kalman_loglik: non-finite log-likelihood");
  return ll;
}

std::vector<double> smoothed_mean(const PseudoObservations& obs, const ARParams& alpha) {
  alpha.validate();
  const std::size_t n = obs.size();
  std::vector<double> a_filt(n), p_filt(n), p_pred(n);
  double a = alpha.mu;
  double p = alpha.stationary_variance();
  for (std::size_t t = 0; t < n; ++t) {
    const double w = obs.variances[t];
    const double f = p + w;
    p_pred[t] = p;
    a_filt[t] = a + p / f * (obs.values[t] - a);
    p_filt[t] = p * w / f;
    a = alpha.mu + alpha.phi * (a_filt[t] - alpha.mu);
    p = alpha.phi * alpha.phi * p_filt[t] + alpha.sigma2;
  }
  std::vector<double> mean(n);
  if (n == 0) return mean;
  mean[n - 1] = a_filt[n - 1];
  for (std::size_t t = n - 1; t-- > 0;) {
    const double a_next = alpha.mu + alpha.phi * (a_filt[t] - alpha.mu);
    const double gain = p_filt[t] * alpha.phi / p_pred[t + 1];
    mean[t] = a_filt[t] + gain * (mean[t + 1] - a_next);
  }
  for (double m : mean)
    if (!std::isfinite(m)) throw NumericalError("smoothed_mean: non-finite state estimate");
  return mean;
}

LatentPath simulation_smoother(const PseudoObservations& obs, const ARParams& alpha, Rng& rng) {
  alpha.validate();
  const std::size_t n = obs.size();
  if (n == 0) return {};
  // E[h|x] - E[h+|x+] is the zero-mean smoother applied to x - x+.
  LatentPath h_plus = simulate_ar1(alpha, n, rng);
  PseudoObservations diff{std::vector<double>(n), obs.variances};
  for (std::size_t t = 0; t < n; ++t) {
    const double x_plus = h_plus[t] + std::sqrt(obs.variances[t]) * std_normal(rng);
    diff.values[t] = obs.values[t] - x_plus;
  }
  const std::vector<double> correction = smoothed_mean(diff, ARParams{0.0, alpha.phi, alpha.sigma2});
  for (std::size_t t = 0; t < n; ++t) h_plus[t] += correction[t];
  return h_plus;
}

namespace {

Eigen::MatrixXd prior_covariance(const ARParams& alpha, std::size_t n) {
  Eigen::MatrixXd s(n, n);
  const double v0 = alpha.stationary_variance();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      s(i, j) = v0 * std::pow(alpha.phi, static_cast<double>(i > j ? i - j : j - i));
  return s;
}

void check_oracle_size(const PseudoObservations& obs) {
  obs.validate();
  if (obs.size() > kMaxOracleSize)
    throw std::invalid_argument("dense oracle refuses n = " + std::to_string(obs.size()) + " > " +
                                std::to_string(kMaxOracleSize));
}

}  // namespace

GaussianMoments smoother_moments_oracle(const PseudoObservations& obs, const ARParams& alpha) {
  alpha.validate();
  check_oracle_size(obs);
  const auto n = static_cast<Eigen::Index>(obs.size());
  const Eigen::MatrixXd prior = prior_covariance(alpha, obs.size());
  Eigen::MatrixXd joint = prior;
  Eigen::VectorXd resid(n);
  for (Eigen::Index t = 0; t < n; ++t) {
    joint(t, t) += obs.variances[t];
    resid(t) = obs.values[t] - alpha.mu;
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(joint);
  GaussianMoments out;
  out.mean = Eigen::VectorXd::Constant(n, alpha.mu) + prior * llt.solve(resid);
  out.cov = prior - prior * llt.solve(prior);
  return out;
}

double dense_loglik_oracle(const PseudoObservations& obs, const ARParams& alpha) {
  alpha.validate();
  check_oracle_size(obs);
  const auto n = static_cast<Eigen::Index>(obs.size());
  Eigen::MatrixXd joint = prior_covariance(alpha, obs.size());
  Eigen::VectorXd resid(n);
  for (Eigen::Index t = 0; t < n; ++t) {
    joint(t, t) += obs.variances[t];
    resid(t) = obs.values[t] - alpha.mu;
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(joint);
  const Eigen::MatrixXd l = llt.matrixL();
  const double log_det = 2.0 * l.diagonal().array().log().sum();
  return -0.5 * (static_cast<double>(n) * kLogTwoPi + log_det + resid.dot(llt.solve(resid)));
}

}  // namespace ums
