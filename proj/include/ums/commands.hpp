#pragma once

// The four experiment commands. Each run_* function does the computation
// without touching the filesystem; cmd_* wraps it with file output and
// returns a process exit code.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ums/config.hpp"
#include "ums/diagnostics.hpp"
#include "ums/models.hpp"
#include "ums/sampler.hpp"

namespace ums {

struct DataBundle {
  Dataset data;
  std::optional<LatentPath> h_true;  // known only for simulated data
};

/// Loads config.data_path, or simulates from [truth] on the simulate stream.
DataBundle obtain_data(const ExperimentConfig& config);

/// Writes <out>/y.csv and <out>/h_true.csv.
int cmd_simulate(const ExperimentConfig& config, std::ostream& log);

struct FitResult {
  DrawStore store;
  std::vector<SummaryRow> rows;
};

std::string shape_name(Family family);

FitResult run_fit(const ExperimentConfig& config, const DataBundle& bundle);
/// Writes draws.csv, summary.txt, summary.csv, acceptance.txt, timing.txt.
int cmd_fit(const ExperimentConfig& config, std::ostream& log);

struct CompareRow {
  std::string name;
  double first = 0.0;   // UMS
  double second = 0.0;  // SS
  double ratio() const { return second / first; }
};

struct CompareReport {
  std::vector<std::size_t> t_indices;  // h indices entering mean / median
  std::vector<double> if_first;
  std::vector<double> if_second;
  std::vector<CompareRow> rows;  // h_<t> for the named indices, then mean, median
  double seconds_per_iteration_first = 0.0;
  double seconds_per_iteration_second = 0.0;
  double max_cost_ratio = 5.0;

  double mean_first() const;
  double mean_second() const;
  double cost_ratio() const { return seconds_per_iteration_first / seconds_per_iteration_second; }
  bool timing_ok() const { return cost_ratio() <= max_cost_ratio; }
};

/// h indices monitored by the comparison: every if_stride-th t plus the
/// configured ones.
std::vector<std::size_t> compare_indices(const ExperimentConfig& config, std::size_t n_obs);

/// IF table of two stores that monitor the same h indices.
CompareReport compare_stores(const DrawStore& first, const DrawStore& second, const std::vector<std::size_t>& named);

struct CompareRuns {
  DrawStore ums;
  DrawStore ss;
  CompareReport report;
};

/// UMS and SS with alpha fixed at [truth], on the same data.
CompareRuns run_compare(const ExperimentConfig& config, const DataBundle& bundle);
void write_compare_report(std::ostream& os, const CompareReport& report);
/// Writes compare.txt and timing.txt; nonzero exit when the cost check fails.
int cmd_compare(const ExperimentConfig& config, std::ostream& log);

struct CheckItem {
  std::string name;
  double observed = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  std::string detail;
};

struct CheckReport {
  std::vector<CheckItem> items;
  bool passed() const;
};

/// Priors and model used by the exactness check (n = 20 Weibull).
Priors gir_priors();
GirReport ums_getting_it_right(const ExperimentConfig& config, std::size_t n_obs, bool square_acceptance, Rng& rng);

CheckReport run_check(const ExperimentConfig& config);
void write_check_report(std::ostream& os, const CheckReport& report);
int cmd_check(const ExperimentConfig& config, std::ostream& log);

}  // namespace ums
