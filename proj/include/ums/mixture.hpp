#pragma once

// Ten-component normal mixture for the log-chi-squared(1) density and its
// deterministic re-centering/re-scaling onto general exp-exp kernels
//
//   f(x; a, b, c) = exp( (a/2) c x - (b/2) exp(c x) ),   b > 0, c != 0.

#include <array>
#include <cstddef>
#include <utility>

namespace ums {

inline constexpr std::size_t kNumComponents = 10;

template <class T>
using ComponentArray = std::array<T, kNumComponents>;

struct MixtureBase {
  ComponentArray<double> weights;
  ComponentArray<double> means;
  ComponentArray<double> variances;
};

/// Parameters (a, b, c) of an exp-exp kernel; b is stored as log b.
struct KernelParams {
  double a = 1.0;
  double log_b = 0.0;
  double c = 1.0;

  static KernelParams from_b(double a, double b, double c);
  double b() const;
  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

struct AdaptedMixture {
  ComponentArray<double> log_weights;  // log p~_i, unnormalized
  ComponentArray<double> normalized_weights;
  ComponentArray<double> log_normalized_weights;
  ComponentArray<double> means;      // m~_i
  ComponentArray<double> std_devs;   // v~_i
  ComponentArray<double> variances;  // v~_i^2
  ComponentArray<double> log_std_devs;
  double log_norm_const = 0.0;       // log sum_i p~_i
};

const MixtureBase& base_constants();

AdaptedMixture adapt(const KernelParams& params);

/// Unnormalized log kernel; -inf once exp(c x) overflows.
double kernel_log_density(double x, const KernelParams& params);

/// log of the integral of exp(kernel_log_density) over the real line.
/// Requires a > 0, else throws
/// std::domain_error("non-integrable kernel").
double log_kernel_normalizer(const KernelParams& params);
double kernel_normalizer(const KernelParams& params);

/// Closed form Gamma(a/2) (2/b)^(a/2) / |c|, in log. Used to cross-check
/// the quadrature route.
double log_kernel_normalizer_closed_form(const KernelParams& params);

double mixture_log_density(double x, const AdaptedMixture& mix);

struct Grid {
  double lower = 0.0;
  double upper = 0.0;
  double step = 0.01;
};

struct ApproximationError {
  double max_abs = 0.0;
  double l1 = 0.0;
};

/// Distance between the quadrature-normalized kernel density and the
/// adapted mixture density over `grid` (L1 by the trapezoid rule).
ApproximationError approximation_error(const KernelParams& params, const Grid& grid);

}  // namespace ums
