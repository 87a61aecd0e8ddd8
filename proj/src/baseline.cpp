#include "ums/baseline.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include "ums/numeric.hpp"

namespace ums {

double slice_sample_1d(const std::function<double(double)>& log_f, double x0, Rng& rng, const SliceOptions& options,
                       bool* failed) {
  if (failed) *failed = false;
  const double level = log_f(x0) - std::exponential_distribution<double>(1.0)(rng);
  double left = x0 - options.width * uniform01(rng);
  double right = left + options.width;
  int j = static_cast<int>(std::floor(options.max_steps * uniform01(rng)));
  int k = options.max_steps - 1 - j;
  while (j > 0 && level < log_f(left)) {
    left -= options.width;
    --j;
  }
  while (k > 0 && level < log_f(right)) {
    right += options.width;
    --k;
  }
  for (int i = 0; i < options.max_shrinks; ++i) {
    const double x1 = left + uniform01(rng) * (right - left);
    if (level < log_f(x1)) return x1;
    if (x1 < x0) {
      left = x1;
    } else {
      right = x1;
    }
  }
  if (failed) *failed = true;
  return x0;
}

ConditionalPrior ar1_conditional(const LatentPath& h, std::size_t t, const ARParams& alpha) {
  const std::size_t n = h.size();
  const double mu = alpha.mu;
  const double phi = alpha.phi;
  if (n == 1) return {mu, alpha.stationary_variance()};
  if (t == 0) return {mu + phi * (h[1] - mu), alpha.sigma2};
  if (t == n - 1) return {mu + phi * (h[n - 2] - mu), alpha.sigma2};
  const double denom = 1.0 + phi * phi;
  return {mu + phi * ((h[t - 1] - mu) + (h[t + 1] - mu)) / denom, alpha.sigma2 / denom};
}

std::size_t slice_update_state(LatentPath& h, const Dataset& data, const ModelSpec& spec, const ARParams& alpha,
                               Rng& rng, const SliceOptions& options) {
  std::size_t failures = 0;
  for (std::size_t t = 0; t < h.size(); ++t) {
    const ConditionalPrior cp = ar1_conditional(h, t, alpha);
    const double y = data.y[t];
    auto log_f = [&](double x) {
      const double d = x - cp.mean;
      const double v = log_obs_density(y, x, spec) - 0.5 * d * d / cp.variance;
      return std::isnan(v) ? kNegInf : v;
    };
    bool failed = false;
    h[t] = slice_sample_1d(log_f, h[t], rng, options, &failed);
    if (failed) ++failures;
  }
  return failures;
}

DrawStore run_ss_chain(const MCMCConfig& config, const Dataset& data, Family family, const Priors& priors,
                       const ARParams& alpha, Rng& rng) {
  priors.validate();
  config.validate();
  alpha.validate();
  validate_dataset(data, family);

  ChainState state = initial_state(data, family, config);
  state.alpha = alpha;
  DrawStore store = make_store(config, data.size());
  const bool has_shape = (family == Family::Weibull || family == Family::Gamma) && !config.fix_shape;
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t total = config.n_burnin + config.n_draws;
  for (std::size_t it = 0; it < total; ++it) {
    if (it == config.n_burnin) {
      store.shape_step = {};
      store.slice_failures = 0;
    }
    std::string block = "shape";
    try {
      if (has_shape) {
        const ShapeStep st = sample_shape(state, data, family, priors, config.rw_step, rng, config.square_acceptance);
        state.shape = st.shape;
        store.shape_step.record(st.accepted);
      }
      block = "slice";
      store.slice_failures += slice_update_state(state.h, data, {family, state.shape}, alpha, rng);
    } catch (const std::exception& e) {
      throw ChainError(it + 1, block, e.what());
    }
    if (it >= config.n_burnin && (it - config.n_burnin + 1) % config.thin == 0) record_draw(store, it + 1, state);
  }
  store.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  store.total_iterations = total;
  return store;
}

}  // namespace ums
