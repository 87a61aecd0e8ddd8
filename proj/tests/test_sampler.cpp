#include <doctest.h>

#include <cmath>
#include <numeric>

#include "grid_oracle.hpp"
#include "ums/sampler.hpp"

using namespace ums;

namespace {

Priors informative() {
  Priors p;
  p.mu_var = 0.25;
  p.phi_a = 20.0;
  p.phi_b = 1.5;
  p.sigma2_shape = 5.0;
  p.sigma2_scale = 0.2;
  p.shape_lower = 0.5;
  p.shape_upper = 2.0;
  return p;
}

const Dataset kThree{{0.4, 1.7, 0.9}};

}  // namespace

TEST_SUITE("sampler") {

TEST_CASE("prior density under reparametrization") {
  const Priors p = informative();
  for (const ARParams a : {ARParams{0.1, 0.9, 0.05}, ARParams{-0.4, -0.3, 0.6}, ARParams{0.0, 0.99, 0.01}}) {
    const Eigen::Vector3d th = to_unconstrained(a);
    const ARParams back = from_unconstrained(th);
    CHECK(back.mu == doctest::Approx(a.mu));
    CHECK(back.phi == doctest::Approx(a.phi).epsilon(1e-14));
    CHECK(back.sigma2 == doctest::Approx(a.sigma2).epsilon(1e-14));
    // dphi/dtheta = (1 - phi^2)/2, dsigma2/dtheta = sigma2
    const double log_jac = std::log(0.5 * (1.0 - a.phi * a.phi)) + std::log(a.sigma2);
    CHECK(p.log_density_unconstrained(th) == doctest::Approx(p.log_density(a) + log_jac).epsilon(1e-12));
  }
  CHECK(std::isinf(p.log_density({0.0, 1.0, 0.1})));
  CHECK(std::isinf(p.log_density({0.0, 0.5, 0.0})));
  CHECK(std::isinf(p.log_density_shape(2.5)));
  CHECK(p.log_density_shape(1.0) == doctest::Approx(-std::log(1.5)));
}

TEST_CASE("closed-form prior mode agrees with the optimizer") {
  const Priors p = informative();
  const LaplaceFit fit = fit_laplace([&](const Eigen::Vector3d& th) { return p.log_density_unconstrained(th); },
                                     Eigen::Vector3d(0.5, 0.0, -1.0));
  CHECK(fit.converged);
  CHECK((fit.mode - p.unconstrained_mode()).norm() < 1e-4);
}

TEST_CASE("optimizer recovers a Gaussian mode and covariance") {
  Eigen::Matrix3d cov;
  cov << 2.0, 0.3, -0.1, 0.3, 0.5, 0.05, -0.1, 0.05, 0.1;
  const Eigen::Matrix3d prec = cov.inverse();
  const Eigen::Vector3d m(1.0, -2.0, 0.5);
  const LaplaceFit fit = fit_laplace(
      [&](const Eigen::Vector3d& x) { return -0.5 * (x - m).dot(prec * (x - m)); }, Eigen::Vector3d::Zero());
  CHECK(fit.converged);
  CHECK((fit.mode - m).norm() < 1e-5);
  CHECK((fit.cov - cov).norm() < 1e-4);
}

TEST_CASE("prior draws have the prior moments") {
  const Priors p = informative();
  Rng rng = make_stream(11, 0);
  const int n = 200000;
  double mu = 0.0, phi = 0.0, s2 = 0.0, shape = 0.0;
  for (int i = 0; i < n; ++i) {
    const ARParams a = p.draw_alpha(rng);
    mu += a.mu;
    phi += a.phi;
    s2 += a.sigma2;
    shape += p.draw_shape(rng);
  }
  CHECK(std::abs(mu / n) < 4.0 * 0.5 / std::sqrt(n));
  CHECK(std::abs(phi / n - (2.0 * 20.0 / 21.5 - 1.0)) < 2e-3);
  CHECK(std::abs(s2 / n - 0.2 / 4.0) < 1e-3);
  CHECK(std::abs(shape / n - 1.25) < 4.0 * 1.5 / std::sqrt(12.0 * n));
}

TEST_CASE("shape step respects bounds and reduces to acceptance one for tiny steps") {
  Rng rng = make_stream(11, 1);
  const auto sim = simulate_durations({Family::Weibull, 1.0}, {0.0, 0.9, 0.05}, 50, rng);
  ChainState st{sim.h, {0.0, 0.9, 0.05}, 9.9, {}};
  Priors flat;
  for (int i = 0; i < 500; ++i) {
    const ShapeStep s = sample_shape(st, sim.data, Family::Weibull, flat, 2.0, rng);
    CHECK(s.shape > 0.0);
    CHECK(s.shape < kMaxShape);
    st.shape = s.shape;
  }
  st.shape = 1.0;
  int acc = 0;
  for (int i = 0; i < 1000; ++i) acc += sample_shape(st, sim.data, Family::Weibull, flat, 1e-12, rng).accepted;
  CHECK(acc >= 995);
  const ShapeStep none = sample_shape(st, sim.data, Family::Exponential, flat, 0.1, rng);
  CHECK_FALSE(none.accepted);
  CHECK(none.shape == st.shape);
}

TEST_CASE("indicator probabilities") {
  const AdaptedMixture mix = adapt(exp_exp_params(1.3, {Family::Weibull, 0.7}));
  for (double h : {-3.0, 0.0, 0.4, 2.0}) {
    const auto pr = indicator_probabilities(h, mix);
    double total = 0.0;
    ComponentArray<double> manual;
    double manual_total = 0.0;
    for (std::size_t i = 0; i < kNumComponents; ++i) {
      total += pr[i];
      const double z = (h - mix.means[i]) / mix.std_devs[i];
      manual[i] = std::exp(mix.log_weights[i] - 0.5 * z * z) / mix.std_devs[i];
      manual_total += manual[i];
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
    for (std::size_t i = 0; i < kNumComponents; ++i) CHECK(pr[i] == doctest::Approx(manual[i] / manual_total).epsilon(1e-12));
  }

  // empirical frequencies of the draws
  const Dataset one{{1.3}};
  const std::vector<AdaptedMixture> mixes{mix};
  const LatentPath h{0.4};
  const auto pr = indicator_probabilities(0.4, mix);
  Rng rng = make_stream(11, 2);
  std::vector<double> counts(kNumComponents, 0.0);
  const int n = 1000000;
  for (int r = 0; r < n; ++r) counts[sample_indicators(h, mixes, rng).s[0]] += 1.0;
  for (std::size_t i = 0; i < kNumComponents; ++i) {
    const double se = std::sqrt(pr[i] * (1.0 - pr[i]) / n);
    CHECK_MESSAGE(std::abs(counts[i] / n - pr[i]) < 4.0 * se + 1e-12, "component " << i);
  }
}

TEST_CASE("identical proposal is always accepted") {
  Rng rng = make_stream(11, 3);
  const ModelSpec spec{Family::Gamma, 2.0};
  const auto sim = simulate_durations(spec, {0.0, 0.9, 0.05}, 100, rng);
  const auto mixes = adapt_all(sim.data, spec);
  CHECK(joint_log_ratio(sim.h, sim.h, sim.data, spec, mixes) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  for (int i = 0; i < 100; ++i) CHECK(joint_accept(sim.h, sim.h, sim.data, spec, mixes, rng));
}

TEST_CASE("alpha proposal is prior-driven when the pseudo-observations carry no information") {
  const Priors p = informative();
  const PseudoObservations vague{{0.3, -0.2, 0.1}, {1e12, 1e12, 1e12}};
  Rng rng = make_stream(11, 4);
  const AlphaProposal prop = propose_alpha(vague, p, {0.0, 0.9, 0.05}, rng);
  CHECK(prop.converged);
  CHECK((prop.fit.mode - p.unconstrained_mode()).norm() < 1e-3);
}

TEST_CASE("run_chain bookkeeping") {
  MCMCConfig cfg;
  cfg.n_burnin = 0;
  cfg.n_draws = 0;
  Rng rng = make_stream(11, 5);
  const auto sim = simulate_durations({Family::Weibull, 0.8}, {0.0, 0.95, 0.05}, 200, rng);
  const DrawStore empty = run_chain(cfg, sim.data, Family::Weibull, Priors{}, rng);
  CHECK(empty.size() == 0);
  CHECK(empty.total_iterations == 0);

  cfg.n_burnin = 20;
  cfg.n_draws = 60;
  cfg.thin = 3;
  cfg.monitored = {1, 100, 200, 201};
  Rng a = make_stream(12, 0), b = make_stream(12, 0);
  const DrawStore s1 = run_chain(cfg, sim.data, Family::Weibull, Priors{}, a);
  const DrawStore s2 = run_chain(cfg, sim.data, Family::Weibull, Priors{}, b);
  CHECK(s1.size() == 20);
  CHECK(s1.iteration.front() == 23);
  CHECK(s1.monitored == std::vector<std::size_t>{1, 100, 200});
  CHECK(s1.mu == s2.mu);
  CHECK(s1.h == s2.h);
  CHECK(s1.shape == s2.shape);
  CHECK(s1.h_block.proposed == 60);
  CHECK(s1.alpha_block.proposed == 60);
  for (std::size_t k = 0; k < s1.size(); ++k) {
    CHECK(std::isfinite(s1.mu[k]));
    CHECK(std::abs(s1.phi[k]) < 1.0);
    CHECK(s1.sigma[k] > 0.0);
    CHECK(s1.shape[k] > 0.0);
    for (const auto& h : s1.h) CHECK(std::isfinite(h[k]));
  }
}

TEST_CASE("rejected joint proposals keep alpha and h together") {
  // With the mutated kernel the chain rejects often; after every step the
  // stored alpha must be one that was paired with the stored h.
  Rng rng = make_stream(11, 6);
  const auto sim = simulate_durations({Family::Weibull, 0.5}, {0.0, 0.9, 0.1}, 100, rng);
  MCMCConfig cfg;
  cfg.square_acceptance = true;
  UmsSampler s(sim.data, Family::Weibull, Priors{}, cfg);
  ChainState prev = s.state();
  std::size_t last_accepts = 0;
  for (int i = 0; i < 200; ++i) {
    s.step(rng);
    const ChainState& cur = s.state();
    if (s.h_block().accepted == last_accepts) {
      CHECK(cur.h == prev.h);
      CHECK(cur.alpha.mu == prev.alpha.mu);
      CHECK(cur.alpha.phi == prev.alpha.phi);
      CHECK(cur.alpha.sigma2 == prev.alpha.sigma2);
    }
    last_accepts = s.h_block().accepted;
    prev = cur;
  }
  CHECK(s.h_block().accepted < s.h_block().proposed);
}

TEST_CASE("h block targets the exact conditional for three observations") {
  const ModelSpec spec{Family::Weibull, 0.6};
  const ARParams alpha{0.1, 0.7, 0.3};
  const auto cdf = test::middle_state_cdf(kThree, spec, alpha, -12.0, 8.0, 1601);
  MCMCConfig cfg;
  cfg.n_burnin = 500;
  cfg.n_draws = 100000;
  cfg.fix_alpha = true;
  cfg.fix_shape = true;
  cfg.initial_alpha = alpha;
  cfg.initial_shape = spec.shape;
  cfg.initial_h = LatentPath(3, alpha.mu);
  cfg.monitored = {2};
  Rng rng = make_stream(11, 7);
  const DrawStore store = run_chain(cfg, kThree, spec.family, Priors{}, rng);
  CHECK(test::ks_distance(store.h[0], cdf) < 0.02);
}

TEST_CASE("configuration validation") {
  MCMCConfig cfg;
  cfg.thin = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.thin = 1;
  cfg.rw_step = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  Priors p;
  p.shape_upper = p.shape_lower;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  MCMCConfig ok;
  ok.initial_h = LatentPath(2, 0.0);
  CHECK_THROWS_AS(UmsSampler(kThree, Family::Weibull, Priors{}, ok), std::invalid_argument);
}

}  // TEST_SUITE
