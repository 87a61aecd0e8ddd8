#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "ums/numeric.hpp"
#include "ums/rng.hpp"
#include "ums/ssm.hpp"

using namespace ums;

namespace {

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double variance(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

PseudoObservations random_obs(std::size_t n, Rng& rng) {
  PseudoObservations o;
  for (std::size_t t = 0; t < n; ++t) {
    o.values.push_back(-3.0 + 6.0 * uniform01(rng));
    o.variances.push_back(0.05 + 3.0 * uniform01(rng));
  }
  return o;
}

const PseudoObservations kFive{{0.3, -1.2, 0.8, 2.0, -0.4}, {0.5, 1.5, 0.2, 2.5, 0.8}};
const ARParams kFiveAlpha{0.2, 0.9, 0.1};

}  // namespace

TEST_SUITE("ssm") {

TEST_CASE("ARParams validation") {
  CHECK_NOTHROW(ARParams{0.0, 0.97, 0.09}.validate());
  CHECK_THROWS_WITH_AS(ARParams({0.0, 1.0, 0.09}).validate(), doctest::Contains("stationarity violation"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(ARParams({0.0, -1.2, 0.09}).validate(), doctest::Contains("stationarity violation"),
                       std::invalid_argument);
  CHECK_THROWS_AS(ARParams({0.0, 0.5, 0.0}).validate(), std::invalid_argument);
  Rng rng = make_stream(1, 0);
  CHECK_THROWS_AS(simulate_ar1({0.0, 1.0, 0.1}, 10, rng), std::invalid_argument);
}

TEST_CASE("simulate_ar1 with vanishing innovations stays at mu") {
  Rng rng = make_stream(1, 1);
  const LatentPath h = simulate_ar1({1.3, 0.5, 1e-20}, 1000, rng);
  for (double x : h) CHECK(x == doctest::Approx(1.3).epsilon(1e-8));
}

TEST_CASE("simulate_ar1 with phi=0 is iid normal") {
  Rng rng = make_stream(1, 2);
  const std::size_t n = 100000;
  const double s2 = 0.7;
  const LatentPath h = simulate_ar1({0.5, 0.0, s2}, n, rng);
  const double se_var = s2 * std::sqrt(2.0 / static_cast<double>(n - 1));
  CHECK(std::abs(variance(h) - s2) < 3.0 * se_var);
  CHECK(std::abs(mean(h) - 0.5) < 3.0 * std::sqrt(s2 / static_cast<double>(n)));
}

TEST_CASE("simulate_ar1 lag-1 autocorrelation and stationary variance") {
  Rng rng = make_stream(1, 3);
  const std::size_t n = 100000;
  const ARParams a{0.0, 0.97, 0.09};
  const LatentPath h = simulate_ar1(a, n, rng);
  const double m = mean(h);
  double c0 = 0.0, c1 = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    c0 += (h[t] - m) * (h[t] - m);
    if (t + 1 < n) c1 += (h[t] - m) * (h[t + 1] - m);
  }
  CHECK(std::abs(c1 / c0 - 0.97) < 0.01);

  // long run variance, n = 1e6 (effective sample size ~ n (1-phi)/(1+phi))
  Rng rng2 = make_stream(1, 4);
  const LatentPath g = simulate_ar1(a, 1000000, rng2);
  const double target = a.stationary_variance();
  const double ess = 1e6 * (1.0 - a.phi * a.phi) / (1.0 + a.phi * a.phi);
  CHECK(std::abs(variance(g) - target) < 4.0 * target * std::sqrt(2.0 / ess));
}

TEST_CASE("Kalman log-likelihood, single observation") {
  const ARParams a{0.4, 0.8, 0.3};
  const PseudoObservations o{{1.1}, {0.6}};
  CHECK(kalman_loglik(o, a) == doctest::Approx(normal_log_pdf(1.1, 0.4, a.stationary_variance() + 0.6)).epsilon(1e-14));
  CHECK(kalman_loglik(PseudoObservations{}, a) == 0.0);
}

TEST_CASE("Kalman log-likelihood, frozen five-observation instance") {
  // scipy.stats.multivariate_normal on the dense covariance
  CHECK(kalman_loglik(kFive, kFiveAlpha) == doctest::Approx(-7.124996606779886).epsilon(1e-12));
  CHECK(dense_loglik_oracle(kFive, kFiveAlpha) == doctest::Approx(-7.124996606779886).epsilon(1e-12));
}

TEST_CASE("Kalman agrees with the dense oracle for n <= 10") {
  Rng rng = make_stream(7, 0);
  for (int i = 0; i < 100; ++i) {
    const std::size_t n = 1 + static_cast<std::size_t>(i % 10);
    const PseudoObservations o = random_obs(n, rng);
    const ARParams a{-1.0 + 2.0 * uniform01(rng), -0.95 + 1.9 * uniform01(rng), 0.01 + 0.5 * uniform01(rng)};
    CHECK(std::abs(kalman_loglik(o, a) - dense_loglik_oracle(o, a)) < 1e-8);
  }
}

TEST_CASE("an uninformative duplicate observation costs -log(2 pi 1e12)/2") {
  Rng rng = make_stream(7, 1);
  const PseudoObservations o = random_obs(6, rng);
  PseudoObservations dup = o;
  dup.values.push_back(o.values.back());
  dup.variances.push_back(1e12);
  const ARParams a{0.1, 0.9, 0.2};
  const double diff = kalman_loglik(dup, a) - kalman_loglik(o, a);
  CHECK(diff == doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi * 1e12)).epsilon(1e-9));
}

TEST_CASE("variance collapse surfaces as a numerical failure") {
  const PseudoObservations o{{1e300, -1e300}, {1e-300, 1e-300}};
  CHECK_THROWS_AS(kalman_loglik(o, {0.0, 0.5, 1.0}), NumericalError);
  CHECK_THROWS_AS(PseudoObservations({{1.0}, {0.0}}).validate(), std::invalid_argument);
}

TEST_CASE("smoother with exact observations returns them") {
  Rng rng = make_stream(7, 2);
  PseudoObservations o = random_obs(8, rng);
  for (double& w : o.variances) w = 1e-14;
  const LatentPath h = simulation_smoother(o, {0.0, 0.9, 0.3}, rng);
  for (std::size_t t = 0; t < h.size(); ++t) CHECK(std::abs(h[t] - o.values[t]) < 1e-6);
}

TEST_CASE("smoother moments oracle, frozen five-observation instance") {
  const GaussianMoments g = smoother_moments_oracle(kFive, kFiveAlpha);
  const double mean_ref[] = {0.32110661569157367, 0.33925326536654277, 0.47296593394310626, 0.42802596508742974,
                             0.3157541054032771};
  const double var_ref[] = {0.16447272921999107, 0.1442478149096137, 0.10879947993974115, 0.15751239623399665,
                            0.18969682247864678};
  for (int i = 0; i < 5; ++i) {
    CHECK(g.mean(i) == doctest::Approx(mean_ref[i]).epsilon(1e-12));
    CHECK(g.cov(i, i) == doctest::Approx(var_ref[i]).epsilon(1e-12));
  }
  CHECK(g.cov(0, 1) == doctest::Approx(0.10818586118221035).epsilon(1e-12));
  CHECK(g.cov(2, 4) == doctest::Approx(0.06932356243948107).epsilon(1e-12));
  const std::vector<double> sm = smoothed_mean(kFive, kFiveAlpha);
  for (int i = 0; i < 5; ++i) CHECK(sm[static_cast<std::size_t>(i)] == doctest::Approx(mean_ref[i]).epsilon(1e-12));
}

TEST_CASE("smoother moments oracle, special cases") {
  const ARParams a{0.5, 0.6, 0.4};
  const GaussianMoments one = smoother_moments_oracle({{2.0}, {0.3}}, a);
  const double p = a.stationary_variance();
  CHECK(one.mean(0) == doctest::Approx((0.5 / p + 2.0 / 0.3) / (1.0 / p + 1.0 / 0.3)).epsilon(1e-14));
  CHECK(one.cov(0, 0) == doctest::Approx(1.0 / (1.0 / p + 1.0 / 0.3)).epsilon(1e-14));

  const GaussianMoments iid = smoother_moments_oracle(kFive, {0.0, 0.0, 0.5});
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      if (i != j) CHECK(std::abs(iid.cov(i, j)) < 1e-15);

  CHECK_THROWS_AS(smoother_moments_oracle({std::vector<double>(51, 0.0), std::vector<double>(51, 1.0)}, a),
                  std::invalid_argument);
}

TEST_CASE("marginal density identity links the oracle and the Kalman filter") {
  // log p(x) = log p(x | h) + log p(h) - log p(h | x) at h = E[h | x]
  const GaussianMoments g = smoother_moments_oracle(kFive, kFiveAlpha);
  const Eigen::Index n = 5;
  const Eigen::VectorXd h = g.mean;
  double log_lik = 0.0;
  for (Eigen::Index t = 0; t < n; ++t)
    log_lik += normal_log_pdf(kFive.values[static_cast<std::size_t>(t)], h(t), kFive.variances[static_cast<std::size_t>(t)]);
  double log_prior = normal_log_pdf(h(0), kFiveAlpha.mu, kFiveAlpha.stationary_variance());
  for (Eigen::Index t = 1; t < n; ++t)
    log_prior += normal_log_pdf(h(t), kFiveAlpha.mu + kFiveAlpha.phi * (h(t - 1) - kFiveAlpha.mu), kFiveAlpha.sigma2);
  const Eigen::LLT<Eigen::MatrixXd> llt(g.cov);
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) log_det += 2.0 * std::log(llt.matrixL()(i, i));
  const double log_post_at_mean = -0.5 * (static_cast<double>(n) * kLogTwoPi + log_det);
  CHECK(log_lik + log_prior - log_post_at_mean == doctest::Approx(kalman_loglik(kFive, kFiveAlpha)).epsilon(1e-12));
}

TEST_CASE("smoother draws match the oracle moments") {
  Rng rng = make_stream(7, 3);
  const std::size_t draws = 100000;
  const GaussianMoments g = smoother_moments_oracle(kFive, kFiveAlpha);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(5);
  Eigen::MatrixXd outer = Eigen::MatrixXd::Zero(5, 5);
  for (std::size_t r = 0; r < draws; ++r) {
    const LatentPath h = simulation_smoother(kFive, kFiveAlpha, rng);
    const Eigen::VectorXd c = Eigen::Map<const Eigen::VectorXd>(h.data(), 5) - g.mean;
    sum += c;
    outer += c * c.transpose();
  }
  const double N = static_cast<double>(draws);
  const Eigen::VectorXd dev = sum / N;
  const Eigen::MatrixXd cov = (outer - N * dev * dev.transpose()) / (N - 1.0);
  for (Eigen::Index i = 0; i < 5; ++i) CHECK(std::abs(dev(i)) < 4.0 * std::sqrt(g.cov(i, i) / N));
  CHECK((cov - g.cov).norm() / g.cov.norm() < 0.03);
}

TEST_CASE("standardized innovations of smoother draws") {
  // Drawn paths given x are exact posterior draws, so the joint (h, x) with
  // x from the model has the prior AR(1) law: innovations are N(0, sigma2).
  Rng rng = make_stream(7, 4);
  const ARParams a{0.0, 0.8, 0.25};
  const std::size_t n = 40;
  std::vector<double> z;
  for (int r = 0; r < 2000; ++r) {
    const LatentPath h0 = simulate_ar1(a, n, rng);
    PseudoObservations o;
    for (std::size_t t = 0; t < n; ++t) {
      o.variances.push_back(0.5);
      o.values.push_back(h0[t] + std::sqrt(0.5) * std_normal(rng));
    }
    const LatentPath h = simulation_smoother(o, a, rng);
    for (std::size_t t = 1; t < n; ++t) z.push_back((h[t] - a.phi * h[t - 1]) / std::sqrt(a.sigma2));
  }
  const double N = static_cast<double>(z.size());
  CHECK(std::abs(mean(z)) < 4.0 / std::sqrt(N));
  CHECK(std::abs(variance(z) - 1.0) < 4.0 * std::sqrt(2.0 / N));
}

TEST_CASE("determinism") {
  Rng a = make_stream(99, 2), b = make_stream(99, 2);
  CHECK(simulate_ar1(kFiveAlpha, 50, a) == simulate_ar1(kFiveAlpha, 50, b));
  CHECK(simulation_smoother(kFive, kFiveAlpha, a) == simulation_smoother(kFive, kFiveAlpha, b));
  Rng c = make_stream(99, 3);
  Rng d = make_stream(99, 2);
  CHECK(simulate_ar1(kFiveAlpha, 50, c) != simulate_ar1(kFiveAlpha, 50, d));
}

}  // TEST_SUITE
