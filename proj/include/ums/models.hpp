#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ums/mixture.hpp"
#include "ums/rng.hpp"
#include "ums/ssm.hpp"

namespace ums {

enum class Family { Exponential, Weibull, Gamma, SV };

std::string_view to_string(Family f);
Family parse_family(std::string_view name);

/// Observation family. `shape` is gamma (Weibull) or zeta (Gamma) and is
/// ignored for Exponential and SV.
struct ModelSpec {
  Family family = Family::Weibull;
  double shape = 1.0;

  bool has_shape() const { return family == Family::Weibull || family == Family::Gamma; }
  void validate() const;
};

inline constexpr double kMaxShape = 10.0;

struct Dataset {
  std::vector<double> y;
  std::size_t size() const { return y.size(); }
};

/// Throws std::domain_error for non-positive durations or n < 2.
void validate_dataset(const Dataset& data, Family family);

/// Exact log p(y | h) for the family.
double log_obs_density(double y, double h, const ModelSpec& spec);

/// Exp-exp kernel parameters of p(y | h) viewed as a function of h.
KernelParams exp_exp_params(double y, const ModelSpec& spec);

/// The h-free part of log p(y | h) left over after the kernel.
double kernel_offset(double y, const ModelSpec& spec);

/// kernel_log_density(h, exp_exp_params(y)) + kernel_offset(y); equals
/// log_obs_density up to rounding.
double log_obs_density_via_kernel(double y, double h, const ModelSpec& spec);

struct SimulatedData {
  Dataset data;
  LatentPath h;
};

/// y_t ~ p(y | h_t) independently.
Dataset draw_observations(const LatentPath& h, const ModelSpec& spec, Rng& rng);

/// Durations with E[y_t | h_t] = exp(h_t); SV returns y_t = exp(h_t/2) eps_t.
SimulatedData simulate_durations(const ModelSpec& spec, const ARParams& alpha, std::size_t n, Rng& rng);

/// CSV with a `y` column; an optional `h_true` column is written alongside.
void write_dataset_csv(std::ostream& os, const Dataset& data, const std::optional<LatentPath>& h_true);
Dataset read_dataset_csv(std::istream& is);
Dataset read_dataset_csv(const std::string& path);

}  // namespace ums
