#pragma once

// Unified mixture sampler for SCD/SV models with AR(1) latent states.
//
// One iteration:
//   1. random-walk MH on log(shape)
//   2. s_t ~ q(s_t | h_t) from the adapted mixture of each observation
//   3. alpha' by an independence MH step around the mode of the
//      linear-Gaussian marginal posterior given s, h' by the simulation
//      smoother, then a joint MH correction of (alpha', h') against the
//      exact likelihood.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ums/mixture.hpp"
#include "ums/models.hpp"
#include "ums/rng.hpp"
#include "ums/ssm.hpp"

namespace ums {

/// mu ~ N(mu_mean, mu_var), (phi+1)/2 ~ Beta(phi_a, phi_b),
/// sigma2 ~ IG(sigma2_shape, sigma2_scale), shape ~ U(shape_lower, shape_upper).
struct Priors {
  double mu_mean = 0.0;
  double mu_var = 25.0;
  double phi_a = 1.0;
  double phi_b = 1.0;
  double sigma2_shape = 0.0005;
  double sigma2_scale = 0.0005;
  double shape_lower = 0.0;
  double shape_upper = 10.0;

  void validate() const;
  double log_density(const ARParams& alpha) const;
  /// Density of the unconstrained vector (mu, log((1+phi)/(1-phi)), log sigma2),
  /// Jacobian included.
  double log_density_unconstrained(const Eigen::Vector3d& theta) const;
  double log_density_shape(double shape) const;
  /// Closed-form mode of log_density_unconstrained.
  Eigen::Vector3d unconstrained_mode() const;

  ARParams draw_alpha(Rng& rng) const;
  double draw_shape(Rng& rng) const;
};

Eigen::Vector3d to_unconstrained(const ARParams& alpha);
ARParams from_unconstrained(const Eigen::Vector3d& theta);

struct MCMCConfig {
  std::size_t n_burnin = 10000;
  std::size_t n_draws = 50000;
  std::size_t thin = 1;
  double rw_step = 0.1;
  bool fix_alpha = false;
  bool fix_shape = false;
  std::vector<std::size_t> monitored{100, 500, 1000};  // 1-based h indices

  ARParams initial_alpha{0.0, 0.9, 0.04};
  double initial_shape = 1.0;
  std::optional<LatentPath> initial_h;  // default log(y_t + 1e-8)

  /// Mutation used only to validate the exactness test: every MH log ratio
  /// is doubled, i.e. the acceptance ratio is squared.
  bool square_acceptance = false;

  void validate() const;
};

struct ChainState {
  LatentPath h;
  ARParams alpha;
  double shape = 1.0;
  std::vector<std::uint8_t> s;  // 0-based component indices
};

struct AcceptanceCounter {
  std::size_t accepted = 0;
  std::size_t proposed = 0;

  void record(bool ok) {
    ++proposed;
    if (ok) ++accepted;
  }
  double rate() const { return proposed ? static_cast<double>(accepted) / static_cast<double>(proposed) : 0.0; }
};

struct DrawStore {
  std::vector<std::size_t> monitored;  // 1-based h indices actually recorded
  std::vector<std::size_t> iteration;
  std::vector<double> mu;
  std::vector<double> phi;
  std::vector<double> sigma;
  std::vector<double> shape;
  std::vector<std::vector<double>> h;  // h[k] = draws of h_{monitored[k]}

  AcceptanceCounter alpha_block;
  AcceptanceCounter h_block;
  AcceptanceCounter shape_step;
  std::size_t optimizer_failures = 0;
  std::size_t slice_failures = 0;
  std::size_t total_iterations = 0;
  double seconds = 0.0;

  std::size_t size() const { return iteration.size(); }
  double seconds_per_iteration() const {
    return total_iterations ? seconds / static_cast<double>(total_iterations) : 0.0;
  }
};

/// Raised when a block fails mid-run; carries the iteration and block name.
class ChainError : public std::runtime_error {
 public:
  ChainError(std::size_t iteration, std::string block, const std::string& what);
  std::size_t iteration;
  std::string block;
};

/// Adapted mixture of every observation for the current shape.
std::vector<AdaptedMixture> adapt_all(const Dataset& data, const ModelSpec& spec);

double log_likelihood(const Dataset& data, const LatentPath& h, const ModelSpec& spec);

/// log sum_i p~_i N(m~_i; h, v~_i^2), with unnormalized p~.
double log_mixture_kernel(double h, const AdaptedMixture& mix);

struct ShapeStep {
  double shape;
  bool accepted;
};

ShapeStep sample_shape(const ChainState& state, const Dataset& data, Family family, const Priors& priors,
                       double rw_step, Rng& rng, bool square_acceptance = false);

/// Pr(s_t = i) for one observation.
ComponentArray<double> indicator_probabilities(double h, const AdaptedMixture& mix);

struct IndicatorDraw {
  std::vector<std::uint8_t> s;
  std::vector<double> log_mix;  // log_mixture_kernel(h_t, mix_t), reusable by joint_accept
};

IndicatorDraw sample_indicators(const LatentPath& h, const std::vector<AdaptedMixture>& mixtures, Rng& rng);
IndicatorDraw sample_indicators(const LatentPath& h, const Dataset& data, const ModelSpec& spec, Rng& rng);

PseudoObservations pseudo_observations(const std::vector<std::uint8_t>& s,
                                       const std::vector<AdaptedMixture>& mixtures);

/// Mode and curvature of a smooth 3-parameter log density.
struct LaplaceFit {
  Eigen::Vector3d mode = Eigen::Vector3d::Zero();
  Eigen::Matrix3d cov = Eigen::Matrix3d::Identity();  // (-Hessian)^-1, ridge-regularized
  double log_density_at_mode = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct ModeFinderOptions {
  int max_iterations = 50;
  // relative to max(1, |log density|)
  double gradient_tolerance = 1e-6;
  double fd_step = 1e-5;
};

/// Quasi-Newton (BFGS) maximization with central-difference derivatives.
/// `inverse_hessian_guess` seeds the BFGS metric.
LaplaceFit fit_laplace(const std::function<double(const Eigen::Vector3d&)>& log_density,
                       const Eigen::Vector3d& start, const ModeFinderOptions& options = {},
                       const std::optional<Eigen::Matrix3d>& inverse_hessian_guess = std::nullopt);

/// log pi*(theta | s): Kalman marginal likelihood of the pseudo-observations
/// plus the unconstrained prior.
double alpha_log_posterior(const Eigen::Vector3d& theta, const PseudoObservations& obs, const Priors& priors);

struct AlphaProposal {
  ARParams alpha;
  bool accepted = false;
  bool converged = false;
  LaplaceFit fit;
};

AlphaProposal propose_alpha(const PseudoObservations& obs, const Priors& priors, const ARParams& current, Rng& rng,
                            const std::optional<Eigen::Matrix3d>& metric_guess = std::nullopt,
                            bool square_acceptance = false);

LatentPath propose_h(const ARParams& alpha, const PseudoObservations& obs, Rng& rng);

/// log of the joint correction ratio; `log_mix_old` may carry the values
/// already computed while drawing the indicators.
double joint_log_ratio(const LatentPath& h_old, const LatentPath& h_new, const Dataset& data, const ModelSpec& spec,
                       const std::vector<AdaptedMixture>& mixtures, const std::vector<double>* log_mix_old = nullptr);

bool joint_accept(const LatentPath& h_old, const LatentPath& h_new, const Dataset& data, const ModelSpec& spec,
                  const std::vector<AdaptedMixture>& mixtures, Rng& rng, bool square_acceptance = false);

/// Stateful UMS transition kernel over (shape, s, alpha, h) for fixed data.
class UmsSampler {
 public:
  UmsSampler(Dataset data, Family family, Priors priors, MCMCConfig config);

  void step(Rng& rng);
  const ChainState& state() const { return state_; }
  void set_state(ChainState state);
  /// Replace the data (same length) keeping the chain state.
  void set_data(Dataset data);

  const AcceptanceCounter& alpha_block() const { return alpha_block_; }
  const AcceptanceCounter& h_block() const { return h_block_; }
  const AcceptanceCounter& shape_step() const { return shape_step_; }
  std::size_t optimizer_failures() const { return optimizer_failures_; }
  void reset_counters();

 private:
  ModelSpec spec() const { return {family_, state_.shape}; }
  void refresh_mixtures();

  Dataset data_;
  Family family_;
  Priors priors_;
  MCMCConfig config_;
  ChainState state_;
  std::vector<AdaptedMixture> mixtures_;
  double mixtures_shape_ = -1.0;
  std::optional<Eigen::Matrix3d> metric_;
  AcceptanceCounter alpha_block_;
  AcceptanceCounter h_block_;
  AcceptanceCounter shape_step_;
  std::size_t optimizer_failures_ = 0;
  std::size_t iteration_ = 0;
};

/// Initial state from config (h_t = log(y_t + 1e-8) unless given).
ChainState initial_state(const Dataset& data, Family family, const MCMCConfig& config);

/// Burn-in then n_draws iterations, keeping every `thin`-th.
DrawStore run_chain(const MCMCConfig& config, const Dataset& data, Family family, const Priors& priors, Rng& rng);

/// Helpers shared with the slice-sampler baseline.
DrawStore make_store(const MCMCConfig& config, std::size_t n_obs);
void record_draw(DrawStore& store, std::size_t iteration, const ChainState& state);

}  // namespace ums
