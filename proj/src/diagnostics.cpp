#include "ums/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <boost/math/distributions/chi_squared.hpp>

namespace ums {

double parzen_weight(double z) {
  z = std::abs(z);
  if (z <= 0.5) return 1.0 - 6.0 * z * z + 6.0 * z * z * z;
  if (z <= 1.0) return 2.0 * (1.0 - z) * (1.0 - z) * (1.0 - z);
  return 0.0;
}

double inefficiency_factor(std::span<const double> draws) {
  const std::size_t n = draws.size();
  if (n < 100) throw std::invalid_argument("inefficiency_factor needs at least 100 draws");
  double mean = 0.0;
  for (double x : draws) mean += x;
  mean /= static_cast<double>(n);
  std::vector<double> c(n);
  double var = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    c[t] = draws[t] - mean;
    var += c[t] * c[t];
  }
  if (!(var > 1e-24 * static_cast<double>(n) * std::max(1.0, mean * mean))) throw std::domain_error("degenerate chain");

  const std::size_t bandwidth = std::min<std::size_t>(1000, n / 10);
  double sum = 0.0;
  for (std::size_t s = 1; s <= bandwidth; ++s) {
    const double* a = c.data();
    const double* b = c.data() + s;
    const std::size_t m = n - s;
    double acc = 0.0;
    for (std::size_t t = 0; t < m; ++t) acc += a[t] * b[t];
    sum += parzen_weight(static_cast<double>(s) / static_cast<double>(bandwidth)) * (acc / var);
  }
  return 1.0 + 2.0 * sum;
}

double sample_quantile(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

SummaryRow summarize(const std::string& name, std::span<const double> draws, std::optional<double> truth) {
  if (draws.empty()) throw std::invalid_argument("cannot summarize an empty draw set");
  SummaryRow row;
  row.name = name;
  row.truth = truth;
  const auto n = static_cast<double>(draws.size());
  for (double x : draws) row.mean += x;
  row.mean /= n;
  double ss = 0.0;
  for (double x : draws) ss += (x - row.mean) * (x - row.mean);
  row.sd = draws.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  std::vector<double> v(draws.begin(), draws.end());
  std::sort(v.begin(), v.end());
  row.q025 = sample_quantile(v, 0.025);
  row.q975 = sample_quantile(v, 0.975);
  try {
    row.inefficiency = inefficiency_factor(draws);
  } catch (const std::exception& e) {
    row.inefficiency_error = e.what();
  }
  return row;
}

std::vector<SummaryRow> posterior_summary(const DrawStore& store, const Truth& truth, const SummaryOptions& options) {
  if (store.size() == 0) throw std::invalid_argument("posterior_summary: empty draw store");
  std::vector<SummaryRow> rows;
  if (options.include_alpha) {
    const auto& a = truth.alpha;
    rows.push_back(summarize("mu", store.mu, a ? std::optional<double>(a->mu) : std::nullopt));
    rows.push_back(summarize("phi", store.phi, a ? std::optional<double>(a->phi) : std::nullopt));
    rows.push_back(summarize("sigma", store.sigma, a ? std::optional<double>(std::sqrt(a->sigma2)) : std::nullopt));
  }
  if (options.include_shape) rows.push_back(summarize(options.shape_name, store.shape, truth.shape));
  for (std::size_t k = 0; k < store.monitored.size(); ++k) {
    const std::size_t t = store.monitored[k];
    std::optional<double> tv;
    if (truth.h && t <= truth.h->size()) tv = (*truth.h)[t - 1];
    rows.push_back(summarize("h_" + std::to_string(t), store.h[k], tv));
  }
  return rows;
}

namespace {

std::string fmt(double v, int prec = 3) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(prec) << v;
  return os.str();
}

}  // namespace

void write_summary_table(std::ostream& os, const std::vector<SummaryRow>& rows) {
  os << std::left << std::setw(10) << "Param." << std::right << std::setw(9) << "True" << std::setw(9) << "Mean"
     << std::setw(9) << "Std Dev" << std::setw(22) << "95% interval" << std::setw(8) << "IF" << '\n';
  for (const auto& r : rows) {
    os << std::left << std::setw(10) << r.name << std::right << std::setw(9) << (r.truth ? fmt(*r.truth) : "-")
       << std::setw(9) << fmt(r.mean) << std::setw(9) << fmt(r.sd) << std::setw(22)
       << ("(" + fmt(r.q025) + ", " + fmt(r.q975) + ")") << std::setw(8)
       << (r.inefficiency ? fmt(*r.inefficiency, 1) : "n/a") << '\n';
  }
}

void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows) {
  os << "param,true,mean,sd,q025,q975,if\n" << std::setprecision(10);
  for (const auto& r : rows) {
    os << r.name << ',';
    if (r.truth) os << *r.truth;
    os << ',' << r.mean << ',' << r.sd << ',' << r.q025 << ',' << r.q975 << ',';
    if (r.inefficiency) os << *r.inefficiency;
    os << '\n';
  }
}

void write_draws_csv(std::ostream& os, const DrawStore& store) {
  os << "iter,mu,phi,sigma,shape";
  for (std::size_t t : store.monitored) os << ",h_" << t;
  os << '\n' << std::setprecision(12);
  for (std::size_t r = 0; r < store.size(); ++r) {
    os << store.iteration[r] << ',' << store.mu[r] << ',' << store.phi[r] << ',' << store.sigma[r] << ','
       << store.shape[r];
    for (const auto& col : store.h) os << ',' << col[r];
    os << '\n';
  }
}

void write_acceptance(std::ostream& os, const DrawStore& store) {
  os << std::setprecision(6);
  os << "alpha_block_rate=" << store.alpha_block.rate() << '\n';
  os << "alpha_block_proposed=" << store.alpha_block.proposed << '\n';
  os << "h_block_rate=" << store.h_block.rate() << '\n';
  os << "h_block_proposed=" << store.h_block.proposed << '\n';
  os << "shape_rate=" << store.shape_step.rate() << '\n';
  os << "shape_proposed=" << store.shape_step.proposed << '\n';
  os << "optimizer_failures=" << store.optimizer_failures << '\n';
  os << "slice_failures=" << store.slice_failures << '\n';
  os << "iterations=" << store.total_iterations << '\n';
}

void write_timing(std::ostream& os, const DrawStore& store) {
  os << std::setprecision(6);
  os << "iterations=" << store.total_iterations << '\n';
  os << "seconds=" << store.seconds << '\n';
  os << "seconds_per_iteration=" << store.seconds_per_iteration() << '\n';
}

GirTest quantile_chi2_test(const std::string& name, const std::vector<double>& reference,
                           const std::vector<double>& candidate, std::size_t n_bins, double level) {
  if (n_bins < 2) throw std::invalid_argument("need at least two bins");
  if (reference.empty() || candidate.empty()) throw std::invalid_argument("empty sample in chi-square test");
  std::vector<double> sorted = reference;
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> edges;
  for (std::size_t b = 1; b < n_bins; ++b)
    edges.push_back(sample_quantile(sorted, static_cast<double>(b) / static_cast<double>(n_bins)));

  auto counts = [&](const std::vector<double>& xs) {
    std::vector<double> c(n_bins, 0.0);
    for (double x : xs) {
      const auto it = std::upper_bound(edges.begin(), edges.end(), x);
      c[static_cast<std::size_t>(it - edges.begin())] += 1.0;
    }
    return c;
  };
  const std::vector<double> ca = counts(reference);
  const std::vector<double> cb = counts(candidate);
  const double na = static_cast<double>(reference.size());
  const double nb = static_cast<double>(candidate.size());
  const double total = na + nb;

  GirTest out;
  out.name = name;
  std::size_t used = 0;
  for (std::size_t b = 0; b < n_bins; ++b) {
    const double col = ca[b] + cb[b];
    if (col == 0.0) continue;
    ++used;
    const double ea = na * col / total;
    const double eb = nb * col / total;
    out.statistic += (ca[b] - ea) * (ca[b] - ea) / ea + (cb[b] - eb) * (cb[b] - eb) / eb;
  }
  out.dof = used > 1 ? used - 1 : 1;
  const boost::math::chi_squared dist(static_cast<double>(out.dof));
  out.p_value = boost::math::cdf(boost::math::complement(dist, out.statistic));
  out.critical = boost::math::quantile(boost::math::complement(dist, level));
  out.passed = out.statistic <= out.critical;
  return out;
}

GirReport compare_gir_samples(const std::vector<std::string>& names,
                              const std::vector<std::vector<double>>& marginal_conditional,
                              const std::vector<std::vector<double>>& successive_conditional,
                              const GirOptions& options) {
  GirReport report;
  const std::size_t k = names.size();
  report.per_test_level = options.alpha / static_cast<double>(std::max<std::size_t>(k, 1));
  for (std::size_t j = 0; j < k; ++j) {
    report.tests.push_back(quantile_chi2_test(names[j], marginal_conditional[j], successive_conditional[j],
                                              options.n_bins, report.per_test_level));
    report.passed = report.passed && report.tests.back().passed;
  }
  report.note = "Bonferroni: each of " + std::to_string(k) + " tests at level " + std::to_string(report.per_test_level) +
                " for a family-wise level of " + std::to_string(options.alpha);
  return report;
}

void write_gir_report(std::ostream& os, const GirReport& report) {
  for (const auto& t : report.tests) {
    os << "  " << std::left << std::setw(10) << t.name << std::right << " chi2=" << std::setw(9) << fmt(t.statistic, 2)
       << " crit=" << std::setw(7) << fmt(t.critical, 2) << " p=" << fmt(t.p_value, 4) << (t.passed ? "  ok" : "  FAIL")
       << '\n';
  }
  os << "  " << report.note << '\n';
}

}  // namespace ums
