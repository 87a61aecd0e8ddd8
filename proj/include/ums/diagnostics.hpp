#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ums/rng.hpp"
#include "ums/sampler.hpp"
#include "ums/ssm.hpp"

namespace ums {

/// Parzen lag window on [0, 1].
double parzen_weight(double z);

/// 1 + 2 sum_{s=1}^{B} w(s/B) rho_s, Parzen window, B = min(1000, N/10).
/// Needs N >= 100; a constant sequence throws std::domain_error("degenerate chain").
double inefficiency_factor(std::span<const double> draws);

/// Linear-interpolation (type 7) sample quantile.
double sample_quantile(std::vector<double> values, double p);

struct SummaryRow {
  std::string name;
  std::optional<double> truth;
  double mean = 0.0;
  double sd = 0.0;
  double q025 = 0.0;
  double q975 = 0.0;
  std::optional<double> inefficiency;
  std::string inefficiency_error;  // set when the IF could not be computed

  bool covers_truth() const { return truth && *truth >= q025 && *truth <= q975; }
};

SummaryRow summarize(const std::string& name, std::span<const double> draws, std::optional<double> truth = std::nullopt);

struct Truth {
  std::optional<ARParams> alpha;
  std::optional<double> shape;
  std::optional<LatentPath> h;
};

struct SummaryOptions {
  std::string shape_name = "shape";
  bool include_alpha = true;
  bool include_shape = true;
};

/// Rows mu, phi, sigma, <shape>, h_<t>... Throws on an empty store.
std::vector<SummaryRow> posterior_summary(const DrawStore& store, const Truth& truth = {},
                                          const SummaryOptions& options = {});

void write_summary_table(std::ostream& os, const std::vector<SummaryRow>& rows);
void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows);
void write_draws_csv(std::ostream& os, const DrawStore& store);
/// Acceptance rates and failure counts; deterministic for a fixed seed.
void write_acceptance(std::ostream& os, const DrawStore& store);
/// Wall-clock figures, kept apart from the deterministic outputs.
void write_timing(std::ostream& os, const DrawStore& store);

// ------------------------------------------------- getting it right

struct GirOptions {
  std::size_t n_samples = 10000;
  std::size_t n_steps = 20;  // transition + data redraws per replicate
  std::size_t n_bins = 10;
  double alpha = 0.05;
};

struct GirTest {
  std::string name;
  double statistic = 0.0;
  double critical = 0.0;
  double p_value = 1.0;
  std::size_t dof = 0;
  bool passed = true;
};

struct GirReport {
  std::vector<GirTest> tests;
  double per_test_level = 0.05;
  bool passed = true;
  std::string note;
};

/// Two-sample chi-square homogeneity test on bins cut at the quantiles of
/// `reference`. Level `level`.
GirTest quantile_chi2_test(const std::string& name, const std::vector<double>& reference,
                           const std::vector<double>& candidate, std::size_t n_bins, double level);

template <class State>
struct GirModel {
  std::function<State(Rng&)> draw_joint;          // parameters, latents and data from the prior
  std::function<void(State&, Rng&)> transition;   // MCMC kernel, data held fixed
  std::function<void(State&, Rng&)> redraw_data;  // y ~ p(y | parameters, latents)
  std::function<std::vector<double>(const State&)> summaries;
  std::vector<std::string> names;
};

GirReport compare_gir_samples(const std::vector<std::string>& names,
                              const std::vector<std::vector<double>>& marginal_conditional,
                              const std::vector<std::vector<double>>& successive_conditional,
                              const GirOptions& options);

/// Marginal-conditional draws versus successive-conditional draws. Each
/// successive-conditional sample is an independent replicate started from
/// the joint prior and pushed through n_steps rounds of (transition, data
/// redraw). Bonferroni across summaries.
template <class State>
GirReport getting_it_right(const GirModel<State>& model, const GirOptions& options, Rng& rng) {
  const std::size_t k = model.names.size();
  std::vector<std::vector<double>> mc(k), sc(k);
  for (auto& v : mc) v.reserve(options.n_samples);
  for (auto& v : sc) v.reserve(options.n_samples);
  for (std::size_t r = 0; r < options.n_samples; ++r) {
    const auto s = model.summaries(model.draw_joint(rng));
    for (std::size_t j = 0; j < k; ++j) mc[j].push_back(s[j]);
  }
  for (std::size_t r = 0; r < options.n_samples; ++r) {
    State st = model.draw_joint(rng);
    for (std::size_t i = 0; i < options.n_steps; ++i) {
      model.transition(st, rng);
      model.redraw_data(st, rng);
    }
    const auto s = model.summaries(st);
    for (std::size_t j = 0; j < k; ++j) sc[j].push_back(s[j]);
  }
  return compare_gir_samples(model.names, mc, sc, options);
}

void write_gir_report(std::ostream& os, const GirReport& report);

}  // namespace ums
