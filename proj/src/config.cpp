#include "ums/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace ums {

namespace pt = boost::property_tree;

std::string_view to_string(SamplerKind k) { return k == SamplerKind::Ums ? "ums" : "ss"; }

SamplerKind parse_sampler(std::string_view name) {
  if (name == "ums") return SamplerKind::Ums;
  if (name == "ss") return SamplerKind::Slice;
  throw std::invalid_argument("unknown sampler '" + std::string(name) + "' (expected ums or ss)");
}

void ExperimentConfig::validate() const {
  model.validate();
  truth.validate();
  if (n_obs < 2) throw std::invalid_argument("truth.n must be at least 2");
  mcmc.validate();
  priors.validate();
  if (if_stride < 1) throw std::invalid_argument("compare.if_stride must be >= 1");
  if (!(check.tolerance_scale >= 0.0)) throw std::invalid_argument("check.tolerance_scale must be >= 0");
  if (check.gir_samples < 10) throw std::invalid_argument("check.gir_samples must be >= 10");
}

namespace {

std::string num(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double to_double(const std::string& key, const std::string& s) {
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw std::invalid_argument("config key '" + key + "': not a number: '" + s + "'");
  return v;
}

std::uint64_t to_u64(const std::string& key, const std::string& s) {
  std::uint64_t v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw std::invalid_argument("config key '" + key + "': not a non-negative integer: '" + s + "'");
  return v;
}

bool to_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw std::invalid_argument("config key '" + key + "': not a boolean: '" + s + "'");
}

std::vector<std::size_t> to_index_list(const std::string& key, const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(' ');
    const auto e = item.find_last_not_of(' ');
    if (b == std::string::npos) continue;
    out.push_back(to_u64(key, item.substr(b, e - b + 1)));
  }
  return out;
}

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"model", {"family", "shape"}},
      {"truth", {"mu", "phi", "sigma", "n"}},
      {"mcmc", {"burnin", "draws", "iterations", "thin", "rw_step", "fix_alpha", "fix_shape", "monitor"}},
      {"priors",
       {"mu_mean", "mu_var", "phi_a", "phi_b", "sigma2_shape", "sigma2_scale", "shape_lower", "shape_upper"}},
      {"run", {"seed", "sampler", "out", "data"}},
      {"compare", {"if_stride"}},
      {"check", {"tolerance_scale", "mutate", "gir_samples", "gir_steps"}},
  };
  return keys;
}

}  // namespace

ExperimentConfig parse_config(std::istream& is) {
  pt::ptree tree;
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw std::invalid_argument(std::string("config parse error: ") + e.what());
  }
  for (const auto& [section, body] : tree) {
    const auto it = known_keys().find(section);
    if (it == known_keys().end()) throw std::invalid_argument("unknown config section [" + section + "]");
    for (const auto& [key, value] : body)
      if (!it->second.count(key)) throw std::invalid_argument("unknown config key '" + section + "." + key + "'");
  }

  ExperimentConfig c;
  auto get = [&](const std::string& path) -> std::optional<std::string> {
    if (auto v = tree.get_optional<std::string>(pt::ptree::path_type(path, '.'))) return *v;
    return std::nullopt;
  };
  if (auto v = get("model.family")) c.model.family = parse_family(*v);
  if (auto v = get("model.shape")) c.model.shape = to_double("model.shape", *v);

  if (auto v = get("truth.mu")) c.truth.mu = to_double("truth.mu", *v);
  if (auto v = get("truth.phi")) c.truth.phi = to_double("truth.phi", *v);
  if (auto v = get("truth.sigma")) {
    const double s = to_double("truth.sigma", *v);
    if (!(s > 0.0)) throw std::invalid_argument("config key 'truth.sigma' must be positive");
    c.truth.sigma2 = s * s;
  }
  if (auto v = get("truth.n")) c.n_obs = to_u64("truth.n", *v);

  if (auto v = get("mcmc.burnin")) c.mcmc.n_burnin = to_u64("mcmc.burnin", *v);
  if (auto v = get("mcmc.draws")) c.mcmc.n_draws = to_u64("mcmc.draws", *v);
  if (auto v = get("mcmc.iterations")) {
    if (get("mcmc.draws")) throw std::invalid_argument("config keys 'mcmc.draws' and 'mcmc.iterations' are exclusive");
    const std::uint64_t total = to_u64("mcmc.iterations", *v);
    if (c.mcmc.n_burnin >= total)
      throw std::invalid_argument("config: burn-in (" + std::to_string(c.mcmc.n_burnin) +
                                  ") must be smaller than total iterations (" + std::to_string(total) + ")");
    c.mcmc.n_draws = total - c.mcmc.n_burnin;
  }
  if (auto v = get("mcmc.thin")) c.mcmc.thin = to_u64("mcmc.thin", *v);
  if (auto v = get("mcmc.rw_step")) c.mcmc.rw_step = to_double("mcmc.rw_step", *v);
  if (auto v = get("mcmc.fix_alpha")) c.mcmc.fix_alpha = to_bool("mcmc.fix_alpha", *v);
  if (auto v = get("mcmc.fix_shape")) c.mcmc.fix_shape = to_bool("mcmc.fix_shape", *v);
  if (auto v = get("mcmc.monitor")) c.mcmc.monitored = to_index_list("mcmc.monitor", *v);

  auto prior = [&](const char* key, double& field) {
    if (auto v = get(std::string("priors.") + key)) field = to_double(std::string("priors.") + key, *v);
  };
  prior("mu_mean", c.priors.mu_mean);
  prior("mu_var", c.priors.mu_var);
  prior("phi_a", c.priors.phi_a);
  prior("phi_b", c.priors.phi_b);
  prior("sigma2_shape", c.priors.sigma2_shape);
  prior("sigma2_scale", c.priors.sigma2_scale);
  prior("shape_lower", c.priors.shape_lower);
  prior("shape_upper", c.priors.shape_upper);

  if (auto v = get("run.seed")) c.seed = to_u64("run.seed", *v);
  if (auto v = get("run.sampler")) c.sampler = parse_sampler(*v);
  if (auto v = get("run.out")) c.out_dir = *v;
  if (auto v = get("run.data")) c.data_path = *v;

  if (auto v = get("compare.if_stride")) c.if_stride = to_u64("compare.if_stride", *v);

  if (auto v = get("check.tolerance_scale")) c.check.tolerance_scale = to_double("check.tolerance_scale", *v);
  if (auto v = get("check.mutate")) c.check.mutate = to_bool("check.mutate", *v);
  if (auto v = get("check.gir_samples")) c.check.gir_samples = to_u64("check.gir_samples", *v);
  if (auto v = get("check.gir_steps")) c.check.gir_steps = to_u64("check.gir_steps", *v);

  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config '" + path + "'");
  return parse_config(in);
}

void write_config(std::ostream& os, const ExperimentConfig& c) {
  auto b = [](bool v) { return v ? "true" : "false"; };
  os << "[model]\nfamily = " << to_string(c.model.family) << "\nshape = " << num(c.model.shape) << "\n\n";
  os << "[truth]\nmu = " << num(c.truth.mu) << "\nphi = " << num(c.truth.phi)
     << "\nsigma = " << num(std::sqrt(c.truth.sigma2)) << "\nn = " << c.n_obs << "\n\n";
  os << "[mcmc]\nburnin = " << c.mcmc.n_burnin << "\ndraws = " << c.mcmc.n_draws << "\nthin = " << c.mcmc.thin
     << "\nrw_step = " << num(c.mcmc.rw_step) << "\nfix_alpha = " << b(c.mcmc.fix_alpha)
     << "\nfix_shape = " << b(c.mcmc.fix_shape) << "\nmonitor = ";
  for (std::size_t i = 0; i < c.mcmc.monitored.size(); ++i) os << (i ? "," : "") << c.mcmc.monitored[i];
  os << "\n\n";
  const Priors& p = c.priors;
  os << "[priors]\nmu_mean = " << num(p.mu_mean) << "\nmu_var = " << num(p.mu_var) << "\nphi_a = " << num(p.phi_a)
     << "\nphi_b = " << num(p.phi_b) << "\nsigma2_shape = " << num(p.sigma2_shape)
     << "\nsigma2_scale = " << num(p.sigma2_scale) << "\nshape_lower = " << num(p.shape_lower)
     << "\nshape_upper = " << num(p.shape_upper) << "\n\n";
  os << "[run]\nseed = " << c.seed << "\nsampler = " << to_string(c.sampler) << "\nout = " << c.out_dir << "\n";
  if (!c.data_path.empty()) os << "data = " << c.data_path << "\n";
  os << "\n[compare]\nif_stride = " << c.if_stride << "\n\n";
  os << "[check]\ntolerance_scale = " << num(c.check.tolerance_scale) << "\nmutate = " << b(c.check.mutate)
     << "\ngir_samples = " << c.check.gir_samples << "\ngir_steps = " << c.check.gir_steps << "\n";
}

}  // namespace ums
