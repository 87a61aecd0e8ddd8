#include "ums/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "ums/numeric.hpp"

namespace ums {

namespace {

constexpr MixtureBase kBase{
    {0.00609, 0.04775, 0.13057, 0.20674, 0.22715, 0.18842, 0.12047, 0.05591, 0.01575, 0.00115},
    {1.92677, 1.34744, 0.73504, 0.02266, -0.85173, -1.97278, -3.46788, -5.55246, -8.68384,
     -14.65000},
    {0.11265, 0.17788, 0.26768, 0.40611, 0.62699, 0.98583, 1.57469, 2.54498, 4.16591,
     7.33342},
};

struct BaseLogs {
  ComponentArray<double> log_weights;
  ComponentArray<double> std_devs;
};

const BaseLogs& base_logs() {
  static const BaseLogs logs = [] {
    BaseLogs l{};
    for (std::size_t i = 0; i < kNumComponents; ++i) {
      l.log_weights[i] = std::log(kBase.weights[i]);
      l.std_devs[i] = std::sqrt(kBase.variances[i]);
    }
    return l;
  }();
  return logs;
}

}  // namespace

KernelParams KernelParams::from_b(double a, double b, double c) {
  if (!(b > 0.0)) throw std::invalid_argument("kernel parameter b must be positive (b = " + std::to_string(b) + ")");
  return KernelParams{a, std::log(b), c};
}

double KernelParams::b() const { return std::exp(log_b); }

void KernelParams::validate() const {
  if (!std::isfinite(a)) throw std::invalid_argument("kernel parameter a must be finite");
  if (!std::isfinite(log_b))
    throw std::invalid_argument("kernel parameter b must be positive and finite (log b = " +
                                std::to_string(log_b) + ")");
  if (!std::isfinite(c) || c == 0.0) throw std::invalid_argument("kernel parameter c must be nonzero");
}

const MixtureBase& base_constants() { return kBase; }

AdaptedMixture adapt(const KernelParams& params) {
  params.validate();
  const BaseLogs& logs = base_logs();
  const double one_minus_a = 1.0 - params.a;
  const double abs_c = std::abs(params.c);
  const double log_abs_c = std::log(abs_c);

  AdaptedMixture mix{};
  for (std::size_t i = 0; i < kNumComponents; ++i) {
    const double m = kBase.means[i];
    const double v2 = kBase.variances[i];
    mix.log_weights[i] = logs.log_weights[i] - log_abs_c - 0.5 * params.log_b +
                         0.5 * one_minus_a * (params.log_b - m) + 0.125 * v2 * one_minus_a * one_minus_a;
    mix.std_devs[i] = logs.std_devs[i] / abs_c;
    mix.variances[i] = mix.std_devs[i] * mix.std_devs[i];
    mix.log_std_devs[i] = std::log(mix.std_devs[i]);
    mix.means[i] = (m - params.log_b - 0.5 * one_minus_a * v2) / params.c;
  }
  mix.log_norm_const = log_sum_exp(mix.log_weights);
  for (std::size_t i = 0; i < kNumComponents; ++i) {
    mix.log_normalized_weights[i] = mix.log_weights[i] - mix.log_norm_const;
    mix.normalized_weights[i] = std::exp(mix.log_normalized_weights[i]);
  }
  return mix;
}

double kernel_log_density(double x, const KernelParams& params) {
  const double cx = params.c * x;
  const double tail = std::exp(params.log_b - std::numbers::ln2 + cx);
  if (!std::isfinite(tail)) return kNegInf;
  const double v = 0.5 * params.a * cx - tail;
  return std::isnan(v) ? kNegInf : v;
}

double log_kernel_normalizer_closed_form(const KernelParams& params) {
  params.validate();
  if (!(params.a > 0.0)) throw std::domain_error("non-integrable kernel");
  const double h = 0.5 * params.a;
  return std::lgamma(h) + h * (std::numbers::ln2 - params.log_b) - std::log(std::abs(params.c));
}

double log_kernel_normalizer(const KernelParams& params) {
  params.validate();
  if (!(params.a > 0.0)) throw std::domain_error("non-integrable kernel");

  // Integrate in u = c x, where the kernel is exp(a u / 2 - (b/2) e^u) with
  // its mode at u* = log(a / b). Bounds are set where the integrand has
  // dropped by exp(-60) relative to the mode.
  const double half_a = 0.5 * params.a;
  const double mode = std::log(params.a) - params.log_b;
  auto log_g = [&](double u) { return half_a * u - std::exp(params.log_b - std::numbers::ln2 + u); };
  const double peak = log_g(mode);
  const double left = mode - 60.0 / half_a - 2.0;
  const double right = mode + std::max(4.0, std::log(120.0 / params.a) + 3.0);

  auto g = [&](double u) { return std::exp(log_g(u) - peak); };
  using boost::math::quadrature::gauss_kronrod;
  double err_l = 0.0;
  double err_r = 0.0;
  const double lo = gauss_kronrod<double, 31>::integrate(g, left, mode, 20, 1e-12, &err_l);
  const double hi = gauss_kronrod<double, 31>::integrate(g, mode, right, 20, 1e-12, &err_r);
  const double total = lo + hi;
  if (!(total > 0.0) || !std::isfinite(total)) throw std::runtime_error("kernel normalizer quadrature failed");
  return peak + std::log(total) - std::log(std::abs(params.c));
}

double kernel_normalizer(const KernelParams& params) { return std::exp(log_kernel_normalizer(params)); }

double mixture_log_density(double x, const AdaptedMixture& mix) {
  ComponentArray<double> terms{};
  for (std::size_t i = 0; i < kNumComponents; ++i) {
    terms[i] = mix.log_normalized_weights[i] + normal_log_pdf(x, mix.means[i], mix.variances[i]);
    if (std::isnan(terms[i])) terms[i] = kNegInf;
  }
  return log_sum_exp(terms);
}

ApproximationError approximation_error(const KernelParams& params, const Grid& grid) {
  if (!(grid.step > 0.0) || !(grid.upper > grid.lower)) throw std::invalid_argument("grid must have step > 0 and upper > lower");
  const double log_z = log_kernel_normalizer(params);
  const AdaptedMixture mix = adapt(params);

  const auto n = static_cast<std::size_t>(std::floor((grid.upper - grid.lower) / grid.step + 1e-9)) + 1;
  ApproximationError out;
  double prev = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double x = grid.lower + static_cast<double>(k) * grid.step;
    const double diff =
        std::abs(std::exp(kernel_log_density(x, params) - log_z) - std::exp(mixture_log_density(x, mix)));
    out.max_abs = std::max(out.max_abs, diff);
    if (k > 0) out.l1 += 0.5 * (prev + diff) * grid.step;
    prev = diff;
  }
  return out;
}

}  // namespace ums
