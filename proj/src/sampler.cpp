#include "ums/sampler.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include "ums/numeric.hpp"

namespace ums {

// ---------------------------------------------------------------- priors

void Priors::validate() const {
  if (!(mu_var > 0.0)) throw std::invalid_argument("prior mu_var must be positive");
  if (!(phi_a > 0.0) || !(phi_b > 0.0)) throw std::invalid_argument("prior phi Beta parameters must be positive");
  if (!(sigma2_shape > 0.0) || !(sigma2_scale > 0.0))
    throw std::invalid_argument("prior sigma2 inverse-gamma parameters must be positive");
  if (!(shape_lower >= 0.0) || !(shape_upper > shape_lower))
    throw std::invalid_argument("shape prior needs 0 <= shape_lower < shape_upper");
}

namespace {

double log_beta_fn(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

double inverse_gamma_const(double k, double beta) { return k * std::log(beta) - std::lgamma(k); }

}  // namespace

double Priors::log_density(const ARParams& alpha) const {
  if (!(std::abs(alpha.phi) < 1.0) || !(alpha.sigma2 > 0.0)) return kNegInf;
  const double u = 0.5 * (alpha.phi + 1.0);
  return normal_log_pdf(alpha.mu, mu_mean, mu_var) + (phi_a - 1.0) * std::log(u) +
         (phi_b - 1.0) * std::log1p(-u) - log_beta_fn(phi_a, phi_b) - std::numbers::ln2 +
         inverse_gamma_const(sigma2_shape, sigma2_scale) - (sigma2_shape + 1.0) * std::log(alpha.sigma2) -
         sigma2_scale / alpha.sigma2;
}

double Priors::log_density_unconstrained(const Eigen::Vector3d& theta) const {
  // u = (1+phi)/2 = logistic(theta_1); the Jacobian turns Beta(a, b) into u^a (1-u)^b.
  const double log_u = -std::log1p(std::exp(-theta[1]));
  const double log_1mu = -std::log1p(std::exp(theta[1]));
  return normal_log_pdf(theta[0], mu_mean, mu_var) + phi_a * log_u + phi_b * log_1mu - log_beta_fn(phi_a, phi_b) +
         inverse_gamma_const(sigma2_shape, sigma2_scale) - sigma2_shape * theta[2] -
         sigma2_scale * std::exp(-theta[2]);
}

double Priors::log_density_shape(double shape) const {
  if (!(shape > shape_lower && shape < shape_upper)) return kNegInf;
  return -std::log(shape_upper - shape_lower);
}

Eigen::Vector3d Priors::unconstrained_mode() const {
  return {mu_mean, std::log(phi_a / phi_b), std::log(sigma2_scale / sigma2_shape)};
}

ARParams Priors::draw_alpha(Rng& rng) const {
  ARParams a;
  a.mu = mu_mean + std::sqrt(mu_var) * std_normal(rng);
  const double ga = std::gamma_distribution<double>(phi_a, 1.0)(rng);
  const double gb = std::gamma_distribution<double>(phi_b, 1.0)(rng);
  a.phi = 2.0 * ga / (ga + gb) - 1.0;
  a.sigma2 = 1.0 / std::gamma_distribution<double>(sigma2_shape, 1.0 / sigma2_scale)(rng);
  return a;
}

double Priors::draw_shape(Rng& rng) const {
  return std::uniform_real_distribution<double>(shape_lower, shape_upper)(rng);
}

Eigen::Vector3d to_unconstrained(const ARParams& alpha) {
  return {alpha.mu, std::log((1.0 + alpha.phi) / (1.0 - alpha.phi)), std::log(alpha.sigma2)};
}

ARParams from_unconstrained(const Eigen::Vector3d& theta) {
  return {theta[0], std::tanh(0.5 * theta[1]), std::exp(theta[2])};
}

void MCMCConfig::validate() const {
  if (thin < 1) throw std::invalid_argument("thin must be >= 1");
  if (!(rw_step > 0.0)) throw std::invalid_argument("rw_step must be positive");
  initial_alpha.validate();
  if (!(initial_shape > 0.0)) throw std::invalid_argument("initial_shape must be positive");
}

ChainError::ChainError(std::size_t iter, std::string blk, const std::string& what)
    : std::runtime_error("iteration " + std::to_string(iter) + ", block '" + blk + "': " + what),
      iteration(iter),
      block(std::move(blk)) {}

// ------------------------------------------------------- per-observation

std::vector<AdaptedMixture> adapt_all(const Dataset& data, const ModelSpec& spec) {
  std::vector<AdaptedMixture> out;
  out.reserve(data.size());
  for (double y : data.y) out.push_back(adapt(exp_exp_params(y, spec)));
  return out;
}

double log_likelihood(const Dataset& data, const LatentPath& h, const ModelSpec& spec) {
  double ll = 0.0;
  for (std::size_t t = 0; t < data.size(); ++t) ll += log_obs_density(data.y[t], h[t], spec);
  return ll;
}

namespace {

// log p~_i + log N(m~_i; h, v~_i^2), per component.
inline void component_terms(double h, const AdaptedMixture& mix, ComponentArray<double>& out) {
  for (std::size_t i = 0; i < kNumComponents; ++i) {
    const double z = (mix.means[i] - h) / mix.std_devs[i];
    out[i] = mix.log_weights[i] - mix.log_std_devs[i] - 0.5 * (kLogTwoPi + z * z);
  }
}

}  // namespace

double log_mixture_kernel(double h, const AdaptedMixture& mix) {
  ComponentArray<double> terms;
  component_terms(h, mix, terms);
  return log_sum_exp(terms);
}

ShapeStep sample_shape(const ChainState& state, const Dataset& data, Family family, const Priors& priors,
                       double rw_step, Rng& rng, bool square_acceptance) {
  if (family != Family::Weibull && family != Family::Gamma) return {state.shape, false};
  const double current = state.shape;
  const double proposal = std::exp(std::log(current) + rw_step * std_normal(rng));
  const double lp_new = priors.log_density_shape(proposal);
  const double u = uniform01(rng);
  if (!std::isfinite(lp_new)) return {current, false};

  // Jacobian of the log-scale random walk: proposal / current.
  double lr = lp_new + log_likelihood(data, state.h, {family, proposal}) + std::log(proposal) -
              priors.log_density_shape(current) - log_likelihood(data, state.h, {family, current}) -
              std::log(current);
  if (square_acceptance) lr *= 2.0;
  if (std::log(u) < lr) return {proposal, true};
  return {current, false};
}

ComponentArray<double> indicator_probabilities(double h, const AdaptedMixture& mix) {
  ComponentArray<double> terms;
  component_terms(h, mix, terms);
  const double norm = log_sum_exp(terms);
  for (double& v : terms) v = std::exp(v - norm);
  return terms;
}

IndicatorDraw sample_indicators(const LatentPath& h, const std::vector<AdaptedMixture>& mixtures, Rng& rng) {
  const std::size_t n = mixtures.size();
  IndicatorDraw out{std::vector<std::uint8_t>(n), std::vector<double>(n)};
  ComponentArray<double> terms;
  ComponentArray<double> cum;
  for (std::size_t t = 0; t < n; ++t) {
    component_terms(h[t], mixtures[t], terms);
    const double m = *std::max_element(terms.begin(), terms.end());
    double total = 0.0;
    for (std::size_t i = 0; i < kNumComponents; ++i) {
      total += std::exp(terms[i] - m);
      cum[i] = total;
    }
    out.log_mix[t] = m + std::log(total);
    const double u = uniform01(rng) * total;
    std::size_t k = 0;
    while (k + 1 < kNumComponents && cum[k] <= u) ++k;
    out.s[t] = static_cast<std::uint8_t>(k);
  }
  return out;
}

IndicatorDraw sample_indicators(const LatentPath& h, const Dataset& data, const ModelSpec& spec, Rng& rng) {
  return sample_indicators(h, adapt_all(data, spec), rng);
}

PseudoObservations pseudo_observations(const std::vector<std::uint8_t>& s,
                                       const std::vector<AdaptedMixture>& mixtures) {
  PseudoObservations obs{std::vector<double>(s.size()), std::vector<double>(s.size())};
  for (std::size_t t = 0; t < s.size(); ++t) {
    obs.values[t] = mixtures[t].means[s[t]];
    obs.variances[t] = mixtures[t].variances[s[t]];
  }
  return obs;
}

// --------------------------------------------------------- mode finding

namespace {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Objective = std::function<double(const Vec3&)>;

Vec3 fd_steps(const Vec3& x, double base) {
  Vec3 h;
  for (int i = 0; i < 3; ++i) h[i] = base * std::max(1.0, std::abs(x[i]));
  return h;
}

Vec3 fd_gradient(const Objective& f, const Vec3& x, double base) {
  const Vec3 h = fd_steps(x, base);
  Vec3 g;
  for (int i = 0; i < 3; ++i) {
    Vec3 xp = x, xm = x;
    xp[i] += h[i];
    xm[i] -= h[i];
    g[i] = (f(xp) - f(xm)) / (2.0 * h[i]);
  }
  return g;
}

Mat3 fd_hessian(const Objective& f, const Vec3& x, double fx, double base) {
  const Vec3 h = fd_steps(x, base);
  Mat3 H;
  for (int i = 0; i < 3; ++i) {
    Vec3 xp = x, xm = x;
    xp[i] += h[i];
    xm[i] -= h[i];
    H(i, i) = (f(xp) - 2.0 * fx + f(xm)) / (h[i] * h[i]);
    for (int j = 0; j < i; ++j) {
      Vec3 pp = x, pm = x, mp = x, mm = x;
      pp[i] += h[i], pp[j] += h[j];
      pm[i] += h[i], pm[j] -= h[j];
      mp[i] -= h[i], mp[j] += h[j];
      mm[i] -= h[i], mm[j] -= h[j];
      H(i, j) = H(j, i) = (f(pp) - f(pm) - f(mp) + f(mm)) / (4.0 * h[i] * h[j]);
    }
  }
  return H;
}

bool all_finite(const Mat3& m) { return m.allFinite(); }

}  // namespace

LaplaceFit fit_laplace(const Objective& f, const Vec3& start, const ModeFinderOptions& options,
                       const std::optional<Mat3>& inverse_hessian_guess) {
  LaplaceFit fit;
  Vec3 x = start;
  double fx = f(x);
  if (!std::isfinite(fx)) return fit;

  Vec3 g = fd_gradient(f, x, options.fd_step);
  Mat3 hinv = inverse_hessian_guess && all_finite(*inverse_hessian_guess) ? *inverse_hessian_guess : Mat3::Identity();
  bool converged = false;
  int it = 0;
  for (; it < options.max_iterations; ++it) {
    if (!g.allFinite()) break;
    if (g.cwiseAbs().maxCoeff() < options.gradient_tolerance * std::max(1.0, std::abs(fx))) {
      converged = true;
      break;
    }
    Vec3 d = hinv * g;
    double slope = g.dot(d);
    if (!(slope > 0.0)) {
      hinv = Mat3::Identity();
      d = g;
      slope = g.dot(d);
    }
    double step = 1.0;
    Vec3 x_new;
    double f_new = kNegInf;
    bool moved = false;
    for (int k = 0; k < 40; ++k) {
      x_new = x + step * d;
      f_new = f(x_new);
      if (std::isfinite(f_new) && f_new >= fx + 1e-4 * step * slope) {
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) {
      // Stalled at the resolution of the finite differences.
      converged = g.cwiseAbs().maxCoeff() < 100.0 * options.gradient_tolerance * std::max(1.0, std::abs(fx));
      break;
    }
    const Vec3 g_new = fd_gradient(f, x_new, options.fd_step);
    const Vec3 s = x_new - x;
    const Vec3 yv = g - g_new;  // gradient change of -f
    const double sy = s.dot(yv);
    if (sy > 1e-12) {
      const double rho = 1.0 / sy;
      const Mat3 v = Mat3::Identity() - rho * s * yv.transpose();
      hinv = v * hinv * v.transpose() + rho * s * s.transpose();
    }
    x = x_new;
    fx = f_new;
    g = g_new;
  }

  fit.mode = x;
  fit.log_density_at_mode = fx;
  fit.iterations = it;
  if (!converged) return fit;

  Mat3 neg_h = -fd_hessian(f, x, fx, options.fd_step);
  if (!all_finite(neg_h)) return fit;
  neg_h = 0.5 * (neg_h + neg_h.transpose());
  double ridge = 0.0;
  for (int k = 0; k < 40; ++k) {
    const Mat3 m = neg_h + ridge * Mat3::Identity();
    Eigen::SelfAdjointEigenSolver<Mat3> eig(m);
    if (eig.info() == Eigen::Success && eig.eigenvalues().minCoeff() > 0.0) {
      fit.cov = m.inverse();
      fit.cov = 0.5 * (fit.cov + fit.cov.transpose());
      fit.converged = true;
      return fit;
    }
    ridge = ridge == 0.0 ? 1e-8 : ridge * 10.0;
  }
  return fit;
}

double alpha_log_posterior(const Vec3& theta, const PseudoObservations& obs, const Priors& priors) {
  if (!theta.allFinite()) return kNegInf;
  const ARParams alpha = from_unconstrained(theta);
  if (!(std::abs(alpha.phi) < 1.0) || !(alpha.sigma2 > 0.0) || !std::isfinite(alpha.sigma2)) return kNegInf;
  try {
    return kalman_loglik(obs, alpha) + priors.log_density_unconstrained(theta);
  } catch (const NumericalError&) {
    return kNegInf;
  }
}

AlphaProposal propose_alpha(const PseudoObservations& obs, const Priors& priors, const ARParams& current, Rng& rng,
                            const std::optional<Mat3>& metric_guess, bool square_acceptance) {
  const Objective f = [&](const Vec3& th) { return alpha_log_posterior(th, obs, priors); };
  const Vec3 theta_cur = to_unconstrained(current);
  AlphaProposal out;
  out.alpha = current;
  out.fit = fit_laplace(f, theta_cur, {}, metric_guess);
  out.converged = out.fit.converged;
  if (!out.converged) return out;

  const Eigen::LLT<Mat3> llt(out.fit.cov);
  const Mat3 l = llt.matrixL();
  const Vec3 z(std_normal(rng), std_normal(rng), std_normal(rng));
  const Vec3 theta_new = out.fit.mode + l * z;
  const double u = uniform01(rng);

  auto log_q = [&](const Vec3& th) {
    const Vec3 w = l.triangularView<Eigen::Lower>().solve(th - out.fit.mode);
    return -0.5 * w.squaredNorm();
  };
  const double f_new = f(theta_new);
  if (!std::isfinite(f_new)) return out;
  double lr = f_new - f(theta_cur) - (log_q(theta_new) - log_q(theta_cur));
  if (square_acceptance) lr *= 2.0;
  if (std::log(u) < lr) {
    out.alpha = from_unconstrained(theta_new);
    out.accepted = true;
  }
  return out;
}

LatentPath propose_h(const ARParams& alpha, const PseudoObservations& obs, Rng& rng) {
  return simulation_smoother(obs, alpha, rng);
}

double joint_log_ratio(const LatentPath& h_old, const LatentPath& h_new, const Dataset& data, const ModelSpec& spec,
                       const std::vector<AdaptedMixture>& mixtures, const std::vector<double>* log_mix_old) {
  double lr = 0.0;
  for (std::size_t t = 0; t < data.size(); ++t) {
    const double old_mix = log_mix_old ? (*log_mix_old)[t] : log_mixture_kernel(h_old[t], mixtures[t]);
    lr += log_obs_density(data.y[t], h_new[t], spec) - log_obs_density(data.y[t], h_old[t], spec) + old_mix -
          log_mixture_kernel(h_new[t], mixtures[t]);
  }
  return std::isnan(lr) ? kNegInf : lr;
}

bool joint_accept(const LatentPath& h_old, const LatentPath& h_new, const Dataset& data, const ModelSpec& spec,
                  const std::vector<AdaptedMixture>& mixtures, Rng& rng, bool square_acceptance) {
  double lr = joint_log_ratio(h_old, h_new, data, spec, mixtures);
  if (square_acceptance) lr *= 2.0;
  return std::log(uniform01(rng)) < lr;
}

// --------------------------------------------------------------- chain

ChainState initial_state(const Dataset& data, Family family, const MCMCConfig& config) {
  ChainState st;
  st.alpha = config.initial_alpha;
  st.shape = config.initial_shape;
  if (config.initial_h) {
    if (config.initial_h->size() != data.size()) throw std::invalid_argument("initial_h length differs from data");
    st.h = *config.initial_h;
  } else {
    st.h.resize(data.size());
    for (std::size_t t = 0; t < data.size(); ++t) {
      const double y = data.y[t];
      st.h[t] = family == Family::SV ? std::log(y * y + 1e-8) : std::log(y + 1e-8);
    }
  }
  st.s.assign(data.size(), 0);
  return st;
}

UmsSampler::UmsSampler(Dataset data, Family family, Priors priors, MCMCConfig config)
    : data_(std::move(data)), family_(family), priors_(priors), config_(std::move(config)) {
  priors_.validate();
  config_.validate();
  validate_dataset(data_, family_);
  state_ = initial_state(data_, family_, config_);
}

void UmsSampler::set_state(ChainState state) {
  if (state.h.size() != data_.size()) throw std::invalid_argument("state length differs from data");
  state.s.resize(data_.size(), 0);
  state_ = std::move(state);
  mixtures_shape_ = -1.0;
}

void UmsSampler::set_data(Dataset data) {
  if (data.size() != data_.size()) throw std::invalid_argument("replacement data must keep its length");
  validate_dataset(data, family_);
  data_ = std::move(data);
  mixtures_shape_ = -1.0;
}

void UmsSampler::reset_counters() {
  alpha_block_ = {};
  h_block_ = {};
  shape_step_ = {};
  optimizer_failures_ = 0;
}

void UmsSampler::refresh_mixtures() {
  if (mixtures_shape_ == state_.shape && mixtures_.size() == data_.size()) return;
  mixtures_ = adapt_all(data_, spec());
  mixtures_shape_ = state_.shape;
}

void UmsSampler::step(Rng& rng) {
  ++iteration_;
  const bool has_shape = family_ == Family::Weibull || family_ == Family::Gamma;
  std::string block = "shape";
  try {
    if (has_shape && !config_.fix_shape) {
      const ShapeStep st =
          sample_shape(state_, data_, family_, priors_, config_.rw_step, rng, config_.square_acceptance);
      state_.shape = st.shape;
      shape_step_.record(st.accepted);
    }

    block = "indicators";
    refresh_mixtures();
    IndicatorDraw draw = sample_indicators(state_.h, mixtures_, rng);
    state_.s = std::move(draw.s);
    const PseudoObservations obs = pseudo_observations(state_.s, mixtures_);

    block = "alpha";
    ARParams alpha_new = state_.alpha;
    if (!config_.fix_alpha) {
      const AlphaProposal prop =
          propose_alpha(obs, priors_, state_.alpha, rng, metric_, config_.square_acceptance);
      if (prop.converged) {
        metric_ = prop.fit.cov;
      } else {
        ++optimizer_failures_;
      }
      alpha_block_.record(prop.accepted);
      alpha_new = prop.alpha;
    }

    block = "h";
    LatentPath h_new = propose_h(alpha_new, obs, rng);
    double lr = joint_log_ratio(state_.h, h_new, data_, spec(), mixtures_, &draw.log_mix);
    if (config_.square_acceptance) lr *= 2.0;
    const bool accepted = std::log(uniform01(rng)) < lr;
    h_block_.record(accepted);
    if (accepted) {
      state_.alpha = alpha_new;
      state_.h = std::move(h_new);
    }
  } catch (const ChainError&) {
    throw;
  } catch (const std::exception& e) {
    throw ChainError(iteration_, block, e.what());
  }
}

DrawStore make_store(const MCMCConfig& config, std::size_t n_obs) {
  DrawStore store;
  for (std::size_t idx : config.monitored)
    if (idx >= 1 && idx <= n_obs) store.monitored.push_back(idx);
  store.h.resize(store.monitored.size());
  const std::size_t expected = config.n_draws / config.thin;
  store.iteration.reserve(expected);
  for (auto* v : {&store.mu, &store.phi, &store.sigma, &store.shape}) v->reserve(expected);
  for (auto& v : store.h) v.reserve(expected);
  return store;
}

void record_draw(DrawStore& store, std::size_t iteration, const ChainState& state) {
  store.iteration.push_back(iteration);
  store.mu.push_back(state.alpha.mu);
  store.phi.push_back(state.alpha.phi);
  store.sigma.push_back(std::sqrt(state.alpha.sigma2));
  store.shape.push_back(state.shape);
  for (std::size_t k = 0; k < store.monitored.size(); ++k) store.h[k].push_back(state.h[store.monitored[k] - 1]);
}

DrawStore run_chain(const MCMCConfig& config, const Dataset& data, Family family, const Priors& priors, Rng& rng) {
  UmsSampler sampler(data, family, priors, config);
  DrawStore store = make_store(config, data.size());
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t total = config.n_burnin + config.n_draws;
  for (std::size_t it = 0; it < total; ++it) {
    if (it == config.n_burnin) sampler.reset_counters();
    sampler.step(rng);
    if (it >= config.n_burnin && (it - config.n_burnin + 1) % config.thin == 0)
      record_draw(store, it + 1, sampler.state());
  }
  store.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  store.total_iterations = total;
  store.alpha_block = sampler.alpha_block();
  store.h_block = sampler.h_block();
  store.shape_step = sampler.shape_step();
  store.optimizer_failures = sampler.optimizer_failures();
  return store;
}

}  // namespace ums
