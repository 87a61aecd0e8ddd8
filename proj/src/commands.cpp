#include "ums/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "ums/baseline.hpp"
#include "ums/mixture.hpp"
#include "ums/ssm.hpp"

namespace ums {

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write '" + path.string() + "'");
  return os;
}

fs::path prepare_out_dir(const std::string& dir) {
  const fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw std::runtime_error("cannot create output directory '" + p.string() + "': " + ec.message());
  return p;
}

void close_checked(std::ofstream& os, const fs::path& path) {
  os.close();
  if (!os) throw std::runtime_error("write failed for '" + path.string() + "'");
}

}  // namespace

DataBundle obtain_data(const ExperimentConfig& config) {
  config.validate();
  DataBundle out;
  if (!config.data_path.empty()) {
    out.data = read_dataset_csv(config.data_path);
    validate_dataset(out.data, config.model.family);
    return out;
  }
  Rng rng = make_stream(config.seed, streams::kSimulate);
  SimulatedData sim = simulate_durations(config.model, config.truth, config.n_obs, rng);
  out.data = std::move(sim.data);
  out.h_true = std::move(sim.h);
  return out;
}

int cmd_simulate(const ExperimentConfig& config, std::ostream& log) {
  ExperimentConfig c = config;
  c.data_path.clear();
  const DataBundle bundle = obtain_data(c);
  const fs::path dir = prepare_out_dir(c.out_dir);

  const fs::path y_path = dir / "y.csv";
  std::ofstream ys = open_out(y_path);
  write_dataset_csv(ys, bundle.data, std::nullopt);
  close_checked(ys, y_path);

  const fs::path h_path = dir / "h_true.csv";
  std::ofstream hs = open_out(h_path);
  hs << "h_true\n" << std::setprecision(17);
  for (double h : *bundle.h_true) hs << h << '\n';
  close_checked(hs, h_path);

  log << "simulated " << bundle.data.size() << " " << to_string(c.model.family) << " observations -> " << y_path.string()
      << ", " << h_path.string() << '\n';
  return 0;
}

// ------------------------------------------------------------------ fit

std::string shape_name(Family family) {
  switch (family) {
    case Family::Weibull:
      return "gamma";
    case Family::Gamma:
      return "zeta";
    default:
      return "shape";
  }
}

FitResult run_fit(const ExperimentConfig& config, const DataBundle& bundle) {
  config.validate();
  if (config.mcmc.n_draws / config.mcmc.thin == 0)
    throw std::invalid_argument("mcmc: no draws retained (draws = " + std::to_string(config.mcmc.n_draws) +
                                ", thin = " + std::to_string(config.mcmc.thin) + ")");
  MCMCConfig m = config.mcmc;
  const bool slice = config.sampler == SamplerKind::Slice;
  if (m.fix_alpha || slice) {
    m.initial_alpha = config.truth;
    if (!m.initial_h) m.initial_h = LatentPath(bundle.data.size(), config.truth.mu);
  }
  if (m.fix_shape) m.initial_shape = config.model.shape;

  FitResult out;
  if (slice) {
    Rng rng = make_stream(config.seed, streams::kBaseline);
    out.store = run_ss_chain(m, bundle.data, config.model.family, config.priors, config.truth, rng);
  } else {
    Rng rng = make_stream(config.seed, streams::kChain);
    out.store = run_chain(m, bundle.data, config.model.family, config.priors, rng);
  }

  Truth truth;
  if (bundle.h_true) {
    truth.alpha = config.truth;
    truth.shape = config.model.shape;
    truth.h = bundle.h_true;
  }
  SummaryOptions opts;
  opts.shape_name = shape_name(config.model.family);
  opts.include_alpha = !(slice || m.fix_alpha);
  opts.include_shape = config.model.has_shape() && !m.fix_shape;
  out.rows = posterior_summary(out.store, truth, opts);
  return out;
}

int cmd_fit(const ExperimentConfig& config, std::ostream& log) {
  const DataBundle bundle = obtain_data(config);
  const FitResult fit = run_fit(config, bundle);
  const fs::path dir = prepare_out_dir(config.out_dir);

  auto emit = [&](const char* name, auto&& writer) {
    const fs::path p = dir / name;
    std::ofstream os = open_out(p);
    writer(os);
    close_checked(os, p);
  };
  emit("draws.csv", [&](std::ostream& os) { write_draws_csv(os, fit.store); });
  emit("summary.txt", [&](std::ostream& os) { write_summary_table(os, fit.rows); });
  emit("summary.csv", [&](std::ostream& os) { write_summary_csv(os, fit.rows); });
  emit("acceptance.txt", [&](std::ostream& os) { write_acceptance(os, fit.store); });
  emit("timing.txt", [&](std::ostream& os) { write_timing(os, fit.store); });

  log << to_string(config.sampler) << " fit, " << to_string(config.model.family) << " n=" << bundle.data.size()
      << ", " << fit.store.size() << " draws\n";
  write_summary_table(log, fit.rows);
  write_acceptance(log, fit.store);
  log << "results in " << dir.string() << '\n';
  return 0;
}

// -------------------------------------------------------------- compare

namespace {

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? std::numeric_limits<double>::quiet_NaN() : s / static_cast<double>(v.size());
}

double median_of(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  return sample_quantile(std::move(v), 0.5);
}

}  // namespace

double CompareReport::mean_first() const { return mean_of(if_first); }
double CompareReport::mean_second() const { return mean_of(if_second); }

std::vector<std::size_t> compare_indices(const ExperimentConfig& config, std::size_t n_obs) {
  std::vector<std::size_t> out;
  for (std::size_t t = config.if_stride; t <= n_obs; t += config.if_stride) out.push_back(t);
  for (std::size_t t : config.mcmc.monitored)
    if (t >= 1 && t <= n_obs) out.push_back(t);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

CompareReport compare_stores(const DrawStore& first, const DrawStore& second, const std::vector<std::size_t>& named) {
  if (first.monitored != second.monitored) throw std::invalid_argument("compared stores monitor different h indices");
  CompareReport r;
  r.t_indices = first.monitored;
  for (std::size_t k = 0; k < first.monitored.size(); ++k) {
    r.if_first.push_back(inefficiency_factor(first.h[k]));
    r.if_second.push_back(inefficiency_factor(second.h[k]));
  }
  for (std::size_t t : named) {
    const auto it = std::find(r.t_indices.begin(), r.t_indices.end(), t);
    if (it == r.t_indices.end()) continue;
    const auto k = static_cast<std::size_t>(it - r.t_indices.begin());
    r.rows.push_back({"h_" + std::to_string(t), r.if_first[k], r.if_second[k]});
  }
  r.rows.push_back({"mean", r.mean_first(), r.mean_second()});
  r.rows.push_back({"median", median_of(r.if_first), median_of(r.if_second)});
  r.seconds_per_iteration_first = first.seconds_per_iteration();
  r.seconds_per_iteration_second = second.seconds_per_iteration();
  return r;
}

CompareRuns run_compare(const ExperimentConfig& config, const DataBundle& bundle) {
  config.validate();
  MCMCConfig m = config.mcmc;
  m.fix_alpha = true;
  m.initial_alpha = config.truth;
  m.initial_h = LatentPath(bundle.data.size(), config.truth.mu);
  if (m.fix_shape) m.initial_shape = config.model.shape;
  m.monitored = compare_indices(config, bundle.data.size());
  if (m.n_draws / m.thin < 100) throw std::invalid_argument("compare needs at least 100 retained draws");

  CompareRuns out;
  {
    Rng rng = make_stream(config.seed, streams::kChain);
    out.ums = run_chain(m, bundle.data, config.model.family, config.priors, rng);
  }
  {
    Rng rng = make_stream(config.seed, streams::kBaseline);
    out.ss = run_ss_chain(m, bundle.data, config.model.family, config.priors, config.truth, rng);
  }
  out.report = compare_stores(out.ums, out.ss, config.mcmc.monitored);
  return out;
}

void write_compare_report(std::ostream& os, const CompareReport& r) {
  const auto flags = os.flags();
  os << std::left << std::setw(10) << "" << std::right << std::setw(10) << "UMS" << std::setw(10) << "SS"
     << std::setw(10) << "SS/UMS" << '\n';
  os << std::fixed << std::setprecision(1);
  for (const auto& row : r.rows)
    os << std::left << std::setw(10) << row.name << std::right << std::setw(10) << row.first << std::setw(10)
       << row.second << std::setw(10) << row.ratio() << '\n';
  os << "(mean and median over " << r.t_indices.size() << " h_t)\n";
  os << std::setprecision(4) << "seconds/iteration: UMS " << r.seconds_per_iteration_first * 1e3 << " ms, SS "
     << r.seconds_per_iteration_second * 1e3 << " ms, ratio " << std::setprecision(2) << r.cost_ratio()
     << (r.timing_ok() ? " (within " : " (EXCEEDS ") << std::setprecision(0) << r.max_cost_ratio << "x)\n";
  os.flags(flags);
}

int cmd_compare(const ExperimentConfig& config, std::ostream& log) {
  const DataBundle bundle = obtain_data(config);
  const CompareRuns runs = run_compare(config, bundle);
  const fs::path dir = prepare_out_dir(config.out_dir);

  const fs::path p = dir / "compare.txt";
  std::ofstream os = open_out(p);
  write_compare_report(os, runs.report);
  os << "\nper-t inefficiency factors\nt,ums,ss\n" << std::setprecision(8);
  for (std::size_t k = 0; k < runs.report.t_indices.size(); ++k)
    os << runs.report.t_indices[k] << ',' << runs.report.if_first[k] << ',' << runs.report.if_second[k] << '\n';
  close_checked(os, p);

  const fs::path tp = dir / "timing.txt";
  std::ofstream ts = open_out(tp);
  ts << "[ums]\n";
  write_timing(ts, runs.ums);
  ts << "[ss]\n";
  write_timing(ts, runs.ss);
  close_checked(ts, tp);

  log << to_string(config.model.family) << " shape=" << config.model.shape << ", alpha fixed at truth\n";
  write_compare_report(log, runs.report);
  return runs.report.timing_ok() ? 0 : 1;
}

// ---------------------------------------------------------------- check

bool CheckReport::passed() const {
  return std::all_of(items.begin(), items.end(), [](const CheckItem& c) { return c.passed; });
}

Priors gir_priors() {
  Priors p;
  p.mu_mean = 0.0;
  p.mu_var = 0.25;
  p.phi_a = 20.0;
  p.phi_b = 1.5;
  p.sigma2_shape = 5.0;
  p.sigma2_scale = 0.2;
  p.shape_lower = 0.5;
  p.shape_upper = 2.0;
  return p;
}

GirReport ums_getting_it_right(const ExperimentConfig& config, std::size_t n_obs, bool square_acceptance, Rng& rng) {
  const Priors priors = gir_priors();
  const Family family = Family::Weibull;
  MCMCConfig m;
  m.n_burnin = 0;
  m.n_draws = 0;
  m.monitored.clear();
  m.square_acceptance = square_acceptance;

  const std::size_t mid = (n_obs + 1) / 2;
  GirModel<UmsSampler> model;
  model.names = {"mu", "phi", "sigma2", "gamma", "h_1", "h_" + std::to_string(mid), "h_" + std::to_string(n_obs)};
  model.draw_joint = [&](Rng& r) {
    ChainState st;
    st.alpha = priors.draw_alpha(r);
    st.shape = priors.draw_shape(r);
    st.h = simulate_ar1(st.alpha, n_obs, r);
    Dataset y = draw_observations(st.h, {family, st.shape}, r);
    UmsSampler s(std::move(y), family, priors, m);
    s.set_state(std::move(st));
    return s;
  };
  model.transition = [](UmsSampler& s, Rng& r) { s.step(r); };
  model.redraw_data = [&](UmsSampler& s, Rng& r) {
    s.set_data(draw_observations(s.state().h, {family, s.state().shape}, r));
  };
  model.summaries = [&](const UmsSampler& s) {
    const ChainState& st = s.state();
    return std::vector<double>{st.alpha.mu, st.alpha.phi, st.alpha.sigma2, st.shape,
                               st.h.front(),  st.h[mid - 1], st.h.back()};
  };
  GirOptions opts;
  opts.n_samples = config.check.gir_samples;
  opts.n_steps = config.check.gir_steps;
  return getting_it_right(model, opts, rng);
}

namespace {

CheckItem make_item(std::string name, double observed, double tolerance, std::string detail = {}) {
  CheckItem c;
  c.name = std::move(name);
  c.observed = observed;
  c.tolerance = tolerance;
  c.passed = observed < tolerance;
  c.detail = std::move(detail);
  return c;
}

double max_abs_diff(const ComponentArray<double>& a, const ComponentArray<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

PseudoObservations random_observations(std::size_t n, Rng& rng) {
  PseudoObservations obs;
  for (std::size_t t = 0; t < n; ++t) {
    obs.values.push_back(-3.0 + 6.0 * uniform01(rng));
    obs.variances.push_back(0.05 + 3.0 * uniform01(rng));
  }
  return obs;
}

ARParams random_alpha(Rng& rng) {
  return {-1.0 + 2.0 * uniform01(rng), -0.95 + 1.9 * uniform01(rng), 0.01 + 0.5 * uniform01(rng)};
}

}  // namespace

CheckReport run_check(const ExperimentConfig& config) {
  config.validate();
  const double scale = config.check.tolerance_scale;
  CheckReport report;

  {
    const auto e1 = approximation_error(KernelParams::from_b(1.0, 1.0, 1.0), {-15.0, 5.0, 0.01});
    report.items.push_back(make_item("mixture (1,1,1) max abs error", e1.max_abs, 1e-2 * scale, "x in [-15, 5]"));
    const auto e2 = approximation_error(KernelParams::from_b(2.0, 2.0, -1.0), {-5.0, 15.0, 0.01});
    report.items.push_back(make_item("mixture (2,2,-1) max abs error", e2.max_abs, 1e-2 * scale, "x in [-5, 15]"));

    const AdaptedMixture id = adapt(KernelParams::from_b(1.0, 1.0, 1.0));
    const MixtureBase& base = base_constants();
    const double d = std::max({max_abs_diff(id.normalized_weights, base.weights), max_abs_diff(id.means, base.means),
                               max_abs_diff(id.variances, base.variances)});
    report.items.push_back(make_item("mixture identity collapse", d, 1e-12 * scale));

    double worst = 0.0;
    for (const auto& k : {KernelParams::from_b(1.0, 1.0, 1.0), KernelParams::from_b(2.0, 2.0, -1.0),
                          KernelParams::from_b(1.0, 4.0, -1.0), KernelParams::from_b(4.0, 0.3, -0.5),
                          KernelParams::from_b(1.0, 2.0, -0.5)}) {
      const double q = log_kernel_normalizer(k);
      const double c = log_kernel_normalizer_closed_form(k);
      worst = std::max(worst, std::abs(std::expm1(q - c)));
    }
    report.items.push_back(make_item("kernel normalizer quadrature vs closed form", worst, 1e-8 * scale, "relative"));
  }

  Rng rng = make_stream(config.seed, streams::kCheck);
  {
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const std::size_t n = 1 + static_cast<std::size_t>(uniform01(rng) * 10.0) % 10;
      const PseudoObservations obs = random_observations(n, rng);
      const ARParams a = random_alpha(rng);
      worst = std::max(worst, std::abs(kalman_loglik(obs, a) - dense_loglik_oracle(obs, a)));
    }
    report.items.push_back(make_item("Kalman log-likelihood vs dense oracle", worst, 1e-8 * scale, "100 instances, n <= 10"));
  }
  {
    const std::size_t n = 5;
    const std::size_t draws = 100000;
    const PseudoObservations obs{{0.3, -1.2, 0.8, 2.0, -0.4}, {0.5, 1.5, 0.2, 2.5, 0.8}};
    const ARParams a{0.2, 0.9, 0.1};
    const GaussianMoments oracle = smoother_moments_oracle(obs, a);
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(n);
    Eigen::MatrixXd outer = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t r = 0; r < draws; ++r) {
      const LatentPath h = simulation_smoother(obs, a, rng);
      const Eigen::Map<const Eigen::VectorXd> v(h.data(), static_cast<Eigen::Index>(n));
      const Eigen::VectorXd c = v - oracle.mean;
      sum += c;
      outer += c * c.transpose();
    }
    const double N = static_cast<double>(draws);
    const Eigen::VectorXd mean_dev = sum / N;
    const Eigen::MatrixXd cov = (outer - N * mean_dev * mean_dev.transpose()) / (N - 1.0);
    double worst_z = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      worst_z = std::max(worst_z, std::abs(mean_dev(ii)) / std::sqrt(oracle.cov(ii, ii) / N));
    }
    report.items.push_back(make_item("smoother means (MC standard errors)", worst_z, 4.0 * scale, "n=5, 1e5 draws"));
    const double rel = (cov - oracle.cov).norm() / oracle.cov.norm();
    report.items.push_back(make_item("smoother covariance relative Frobenius", rel, 0.03 * scale, "n=5, 1e5 draws"));
  }
  {
    const GirReport gir = ums_getting_it_right(config, 20, config.check.mutate, rng);
    double worst = 0.0;
    std::ostringstream detail;
    for (const auto& t : gir.tests) {
      worst = std::max(worst, t.statistic / t.critical);
      detail << t.name << "=" << std::fixed << std::setprecision(1) << t.statistic << " ";
    }
    detail << "(critical " << std::setprecision(2) << (gir.tests.empty() ? 0.0 : gir.tests.front().critical)
           << ", Bonferroni level " << std::setprecision(4) << gir.per_test_level << ")";
    report.items.push_back(make_item(std::string("getting it right, n=20 Weibull") +
                                         (config.check.mutate ? " [mutated kernel]" : ""),
                                     worst, 1.0 * scale, "max chi2/critical; " + detail.str()));
  }
  return report;
}

void write_check_report(std::ostream& os, const CheckReport& report) {
  const auto flags = os.flags();
  for (const auto& c : report.items) {
    os << (c.passed ? "PASS  " : "FAIL  ") << std::left << std::setw(46) << c.name << std::right
       << " observed=" << std::scientific << std::setprecision(3) << c.observed << " tolerance=" << c.tolerance;
    if (!c.detail.empty()) os << "  [" << c.detail << "]";
    os << '\n';
  }
  os.flags(flags);
  os << (report.passed() ? "all checks passed" : "some checks FAILED") << '\n';
}

int cmd_check(const ExperimentConfig& config, std::ostream& log) {
  const CheckReport report = run_check(config);
  write_check_report(log, report);
  return report.passed() ? 0 : 1;
}

}  // namespace ums
