#pragma once

// Experiment configuration as a sectioned key-value (INI) file:
//
//   [model]   family = weibull|gamma|exponential|sv, shape
//   [truth]   mu, phi, sigma, n
//   [mcmc]    burnin, draws (or iterations = burnin + draws), thin, rw_step,
//             fix_alpha, fix_shape, monitor = 100,500,1000
//   [priors]  mu_mean, mu_var, phi_a, phi_b, sigma2_shape, sigma2_scale,
//             shape_lower, shape_upper
//   [run]     seed, sampler = ums|ss, out, data
//   [compare] if_stride
//   [check]   tolerance_scale, mutate, gir_samples, gir_steps

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>

#include "ums/models.hpp"
#include "ums/sampler.hpp"
#include "ums/ssm.hpp"

namespace ums {

enum class SamplerKind { Ums, Slice };

std::string_view to_string(SamplerKind k);
SamplerKind parse_sampler(std::string_view name);

struct CheckSettings {
  double tolerance_scale = 1.0;
  bool mutate = false;
  std::size_t gir_samples = 10000;
  std::size_t gir_steps = 20;
};

struct ExperimentConfig {
  ModelSpec model{Family::Weibull, 0.5};
  ARParams truth{0.0, 0.97, 0.09};
  std::size_t n_obs = 1000;
  MCMCConfig mcmc;
  Priors priors;
  SamplerKind sampler = SamplerKind::Ums;
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  std::string data_path;  // empty: simulate from [truth]
  std::size_t if_stride = 10;
  CheckSettings check;

  /// Throws std::invalid_argument with the offending key.
  void validate() const;
};

ExperimentConfig parse_config(std::istream& is);
ExperimentConfig load_config(const std::string& path);
void write_config(std::ostream& os, const ExperimentConfig& config);

}  // namespace ums
