#include "ums/models.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "ums/numeric.hpp"

namespace ums {

std::string_view to_string(Family f) {
  switch (f) {
    case Family::Exponential: return "exponential";
    case Family::Weibull: return "weibull";
    case Family::Gamma: return "gamma";
    case Family::SV: return "sv";
  }
  return "unknown";
}

Family parse_family(std::string_view name) {
  if (name == "exponential") return Family::Exponential;
  if (name == "weibull") return Family::Weibull;
  if (name == "gamma") return Family::Gamma;
  if (name == "sv") return Family::SV;
  throw std::invalid_argument("unknown model family '" + std::string(name) + "'");
}

void ModelSpec::validate() const {
  if (has_shape() && !(shape > 0.0 && shape <= kMaxShape))
    throw std::invalid_argument("shape parameter must lie in (0, 10], got " + std::to_string(shape));
}

void validate_dataset(const Dataset& data, Family family) {
  if (data.size() < 2) throw std::domain_error("dataset needs at least 2 observations");
  for (std::size_t t = 0; t < data.size(); ++t) {
    const double y = data.y[t];
    const bool ok = family == Family::SV ? (std::isfinite(y) && y != 0.0) : (std::isfinite(y) && y > 0.0);
    if (!ok) throw std::domain_error("observation " + std::to_string(t + 1) + " is outside the support (y = " + std::to_string(y) + ")");
  }
}

namespace {

void check_support(double y, const ModelSpec& spec) {
  if (spec.family == Family::SV) {
    if (y == 0.0 || !std::isfinite(y)) throw std::domain_error("SV observation must be finite and nonzero");
  } else if (!(y > 0.0) || !std::isfinite(y)) {
    throw std::domain_error("duration must be positive, got " + std::to_string(y));
  }
}

// log Gamma(1 + 1/gamma)
double weibull_log_scale(double gamma) { return std::lgamma(1.0 + 1.0 / gamma); }

}  // namespace

double log_obs_density(double y, double h, const ModelSpec& spec) {
  check_support(y, spec);
  switch (spec.family) {
    case Family::Exponential:
      return -h - y * std::exp(-h);
    case Family::Weibull: {
      const double g = spec.shape;
      const double lg = weibull_log_scale(g);
      return std::log(g) + g * (lg - h) + (g - 1.0) * std::log(y) - std::exp(g * (std::log(y) + lg - h));
    }
    case Family::Gamma: {
      const double z = spec.shape;
      return z * (std::log(z) - h) + (z - 1.0) * std::log(y) - y * z * std::exp(-h) - std::lgamma(z);
    }
    case Family::SV:
      return -0.5 * kLogTwoPi - 0.5 * h - 0.5 * y * y * std::exp(-h);
  }
  return kNegInf;
}

KernelParams exp_exp_params(double y, const ModelSpec& spec) {
  check_support(y, spec);
  switch (spec.family) {
    case Family::Exponential:
      return {2.0, std::numbers::ln2 + std::log(y), -1.0};
    case Family::Weibull: {
      const double g = spec.shape;
      return {2.0, std::numbers::ln2 + g * (std::log(y) + weibull_log_scale(g)), -g};
    }
    case Family::Gamma: {
      const double z = spec.shape;
      return {2.0 * z, std::numbers::ln2 + std::log(y) + std::log(z), -1.0};
    }
    case Family::SV:
      return {1.0, 2.0 * std::log(std::abs(y)), -1.0};
  }
  throw std::invalid_argument("unknown family");
}

double kernel_offset(double y, const ModelSpec& spec) {
  check_support(y, spec);
  switch (spec.family) {
    case Family::Exponential:
      return 0.0;
    case Family::Weibull: {
      const double g = spec.shape;
      return std::log(g) + g * weibull_log_scale(g) + (g - 1.0) * std::log(y);
    }
    case Family::Gamma: {
      const double z = spec.shape;
      return z * std::log(z) + (z - 1.0) * std::log(y) - std::lgamma(z);
    }
    case Family::SV:
      return -0.5 * kLogTwoPi;
  }
  return 0.0;
}

double log_obs_density_via_kernel(double y, double h, const ModelSpec& spec) {
  return kernel_log_density(h, exp_exp_params(y, spec)) + kernel_offset(y, spec);
}

Dataset draw_observations(const LatentPath& h, const ModelSpec& spec, Rng& rng) {
  spec.validate();
  Dataset data;
  data.y.resize(h.size());
  for (std::size_t t = 0; t < h.size(); ++t) {
    const double scale = std::exp(h[t]);
    double y = 0.0;
    switch (spec.family) {
      case Family::Exponential:
        y = std::exponential_distribution<double>(1.0 / scale)(rng);
        break;
      case Family::Weibull:
        y = std::weibull_distribution<double>(spec.shape, scale / std::exp(weibull_log_scale(spec.shape)))(rng);
        break;
      case Family::Gamma:
        y = std::gamma_distribution<double>(spec.shape, scale / spec.shape)(rng);
        break;
      case Family::SV:
        y = std::exp(0.5 * h[t]) * std_normal(rng);
        break;
    }
    data.y[t] = y;
  }
  return data;
}

SimulatedData simulate_durations(const ModelSpec& spec, const ARParams& alpha, std::size_t n, Rng& rng) {
  spec.validate();
  SimulatedData out;
  out.h = simulate_ar1(alpha, n, rng);
  out.data = draw_observations(out.h, spec, rng);
  return out;
}

void write_dataset_csv(std::ostream& os, const Dataset& data, const std::optional<LatentPath>& h_true) {
  if (h_true && h_true->size() != data.size()) throw std::invalid_argument("h_true length differs from dataset");
  os << (h_true ? "y,h_true\n" : "y\n");
  os << std::setprecision(17);
  for (std::size_t t = 0; t < data.size(); ++t) {
    os << data.y[t];
    if (h_true) os << ',' << (*h_true)[t];
    os << '\n';
  }
}

Dataset read_dataset_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("dataset CSV is empty");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  std::size_t col = header.size();
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == "y" || header[i] == "y\r") col = i;
  if (col == header.size()) throw std::runtime_error("dataset CSV has no 'y' column");

  Dataset data;
  std::size_t row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    std::stringstream ss(line);
    std::string cell;
    for (std::size_t i = 0; i <= col; ++i)
      if (!std::getline(ss, cell, ',')) throw std::runtime_error("dataset CSV row " + std::to_string(row) + " is short");
    try {
      data.y.push_back(std::stod(cell));
    } catch (const std::exception&) {
      throw std::runtime_error("dataset CSV row " + std::to_string(row) + ": cannot parse '" + cell + "'");
    }
  }
  return data;
}

Dataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset '" + path + "'");
  return read_dataset_csv(in);
}

}  // namespace ums
