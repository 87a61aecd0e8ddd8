#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ums/commands.hpp"

using namespace ums;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ums_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(UMS_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

ExperimentConfig small_config(Family family, double shape) {
  ExperimentConfig c;
  c.model = {family, shape};
  c.n_obs = 200;
  c.mcmc.n_burnin = 50;
  c.mcmc.n_draws = 200;
  c.mcmc.monitored = {10, 100, 200};
  c.seed = 7;
  return c;
}

}  // namespace

TEST_SUITE("commands") {

TEST_CASE("simulate is reproducible byte for byte") {
  const fs::path a = scratch("sim_a"), b = scratch("sim_b");
  ExperimentConfig c = small_config(Family::Weibull, 0.5);
  std::ostringstream log;
  c.out_dir = a.string();
  CHECK(cmd_simulate(c, log) == 0);
  c.out_dir = b.string();
  CHECK(cmd_simulate(c, log) == 0);
  CHECK(slurp(a / "y.csv") == slurp(b / "y.csv"));
  CHECK(slurp(a / "h_true.csv") == slurp(b / "h_true.csv"));
  CHECK(slurp(a / "y.csv").rfind("y\n", 0) == 0);

  // the written dataset reloads to the simulated one
  c.data_path = (a / "y.csv").string();
  const DataBundle loaded = obtain_data(c);
  c.data_path.clear();
  const DataBundle direct = obtain_data(c);
  CHECK(loaded.data.y == direct.data.y);
  CHECK_FALSE(loaded.h_true);
  REQUIRE(direct.h_true);
  CHECK(direct.h_true->size() == 200);
}

TEST_CASE("fit output is deterministic apart from timing") {
  const fs::path a = scratch("fit_a"), b = scratch("fit_b");
  ExperimentConfig c = small_config(Family::Gamma, 2.0);
  std::ostringstream log;
  c.out_dir = a.string();
  CHECK(cmd_fit(c, log) == 0);
  c.out_dir = b.string();
  CHECK(cmd_fit(c, log) == 0);
  for (const char* f : {"draws.csv", "summary.txt", "summary.csv", "acceptance.txt"}) {
    CAPTURE(f);
    CHECK(slurp(a / f) == slurp(b / f));
  }
  CHECK(fs::exists(a / "timing.txt"));
  CHECK(slurp(a / "draws.csv").rfind("iter,mu,phi,sigma,shape,h_10,h_100,h_200\n", 0) == 0);
  CHECK(slurp(a / "summary.csv").find("\nzeta,2,") != std::string::npos);
}

TEST_CASE("fit rows depend on what is sampled") {
  ExperimentConfig c = small_config(Family::Weibull, 0.5);
  const DataBundle bundle = obtain_data(c);
  const FitResult full = run_fit(c, bundle);
  REQUIRE(full.rows.size() == 7);
  CHECK(full.rows[3].name == "gamma");
  CHECK(full.rows[4].truth);

  c.sampler = SamplerKind::Slice;
  const FitResult ss = run_fit(c, bundle);
  REQUIRE(ss.rows.size() == 4);
  CHECK(ss.rows[0].name == "gamma");
  for (double p : ss.store.phi) CHECK(p == 0.97);

  c.sampler = SamplerKind::Ums;
  c.mcmc.fix_alpha = true;
  c.mcmc.fix_shape = true;
  const FitResult fixed = run_fit(c, bundle);
  REQUIRE(fixed.rows.size() == 3);
  for (double s : fixed.store.shape) CHECK(s == 0.5);

  c.mcmc.n_draws = 1;
  c.mcmc.thin = 2;
  CHECK_THROWS_AS(run_fit(c, bundle), std::invalid_argument);
}

TEST_CASE("comparison bookkeeping") {
  ExperimentConfig c = small_config(Family::Weibull, 1.0);
  c.if_stride = 50;
  CHECK(compare_indices(c, 200) == std::vector<std::size_t>{10, 50, 100, 150, 200});

  Rng rng = make_stream(1, 0);
  DrawStore s;
  s.monitored = {10, 100};
  s.h.resize(2);
  for (int i = 0; i < 300; ++i) {
    s.h[0].push_back(std_normal(rng));
    s.h[1].push_back(std_normal(rng));
  }
  s.seconds = 3.0;
  s.total_iterations = 300;
  const CompareReport r = compare_stores(s, s, {100, 500});
  REQUIRE(r.rows.size() == 3);
  CHECK(r.rows[0].name == "h_100");
  CHECK(r.rows[1].name == "mean");
  for (const auto& row : r.rows) CHECK(row.ratio() == 1.0);
  CHECK(r.cost_ratio() == 1.0);
  CHECK(r.timing_ok());

  DrawStore other = s;
  other.monitored = {10, 101};
  CHECK_THROWS_AS(compare_stores(s, other, {}), std::invalid_argument);

  c.mcmc.n_draws = 99;
  CHECK_THROWS_AS(run_compare(c, obtain_data(c)), std::invalid_argument);
}

TEST_CASE("small comparison run") {
  ExperimentConfig c = small_config(Family::Weibull, 0.5);
  c.mcmc.n_draws = 400;
  c.if_stride = 20;
  const CompareRuns runs = run_compare(c, obtain_data(c));
  CHECK(runs.report.t_indices.size() == 11);
  CHECK(runs.ums.size() == 400);
  CHECK(runs.ss.size() == 400);
  for (double p : runs.ums.phi) CHECK(p == 0.97);
  CHECK(runs.ums.h_block.rate() > 0.5);
  std::ostringstream os;
  write_compare_report(os, runs.report);
  CHECK(os.str().find("seconds/iteration") != std::string::npos);
}

TEST_CASE("check with zero tolerance fails every item") {
  ExperimentConfig c;
  c.check.tolerance_scale = 0.0;
  c.check.gir_samples = 200;
  const CheckReport r = run_check(c);
  CHECK(r.items.size() == 8);
  CHECK_FALSE(r.passed());
  for (const auto& item : r.items) CHECK_FALSE(item.passed);
  std::ostringstream os;
  write_check_report(os, r);
  CHECK(os.str().find("some checks FAILED") != std::string::npos);
}

TEST_CASE("command-line exit codes") {
  const fs::path dir = scratch("cli");
  const std::string out = " --out " + dir.string();
  {
    std::ofstream cfg(dir / "small.ini");
    cfg << "[truth]\nn = 100\n[mcmc]\nburnin = 10\ndraws = 120\nmonitor = 5,50\n";
  }
  const std::string small = " --config " + (dir / "small.ini").string();
  CHECK(run_cli("simulate" + small + out + " --seed 3") == 0);
  CHECK(fs::exists(dir / "y.csv"));
  CHECK(run_cli("fit" + small + out + " --seed 3 --sampler ss") == 0);
  CHECK(slurp(dir / "acceptance.txt").find("shape_proposed=120") != std::string::npos);
  CHECK(run_cli("fit" + small + out + " --fix-alpha --data " + (dir / "y.csv").string()) == 0);
  CHECK(run_cli("compare" + small + out + " --seed 3") == 0);
  CHECK(fs::exists(dir / "compare.txt"));

  {
    std::ofstream bad(dir / "bad.ini");
    bad << "[mcmc]\nburnin = 500\niterations = 100\n";
  }
  CHECK(run_cli("fit --config " + (dir / "bad.ini").string() + out) == 2);
  CHECK(run_cli("fit" + small + out + " --sampler hmc") != 0);
  CHECK(run_cli("fit --config /nonexistent.ini") != 0);
  CHECK(run_cli("") != 0);
  {
    std::ofstream tiny(dir / "tiny.ini");
    tiny << "[check]\ngir_samples = 50\n";
  }
  CHECK(run_cli("check --config " + (dir / "tiny.ini").string() + " --tol-scale 0") == 1);
}

}  // TEST_SUITE
