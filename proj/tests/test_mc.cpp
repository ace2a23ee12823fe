#include <doctest.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "pvar/errors.hpp"
#include "pvar/mc.hpp"

using namespace pvar;

TEST_CASE("mc: sample summaries by hand") {
  CHECK(mean_of({1.0, 2.0, 3.0, 7.0}) == 3.25);
  CHECK(median_of({5.0, 1.0, 3.0}) == 3.0);
  CHECK(median_of({1.0, 2.0, 4.0, 7.0}) == 3.0);
  CHECK(mad_of({1.0, 2.0, 4.0, 7.0}) == 1.5);

  // Linear interpolation between order statistics at q (m - 1).
  const std::vector<double> x = {40.0, 10.0, 30.0, 20.0};
  CHECK(quantile_of(x, 0.0) == 10.0);
  CHECK(quantile_of(x, 1.0) == 40.0);
  CHECK(quantile_of(x, 0.5) == 25.0);
  CHECK(quantile_of(x, 0.25) == 17.5);

  CHECK_THROWS_AS(mean_of({}), domain_error);
  CHECK_THROWS_AS(median_of({}), domain_error);
  CHECK_THROWS_AS(quantile_of({}, 0.5), domain_error);
  CHECK_THROWS_AS(quantile_of(x, 1.5), domain_error);
}

TEST_CASE("mc: median of bucket means") {
  const std::vector<double> x = {1, 2, 3, 4, 5, 6, 7, 8};
  CHECK(median_of_means(x, 2) == 4.5);   // bucket means 2.5, 6.5
  CHECK(median_of_means(x, 3) == 3.5);   // buckets of 2: 1.5, 3.5, 5.5
  CHECK(median_of_means(x, 1) == 4.5);
  CHECK_THROWS_AS(median_of_means(x, 0), domain_error);
  CHECK_THROWS_AS(median_of_means(x, 9), domain_error);
}

TEST_CASE("mc: Kolmogorov-Smirnov distances") {
  auto unif = [](double v) { return std::min(std::max(v, 0.0), 1.0); };
  CHECK(ks_distance_to_cdf({0.25}, unif) == 0.75);
  CHECK(ks_distance_to_cdf({0.5}, unif) == 0.5);
  CHECK_THROWS_AS(ks_distance_to_cdf({}, unif), domain_error);

  CHECK(ks_distance_two_sample({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}) == 0.0);
  CHECK(ks_distance_two_sample({0.0, 1.0}, {2.0, 3.0}) == 1.0);
  CHECK_THROWS_AS(ks_distance_two_sample({}, {1.0}), domain_error);
}

TEST_CASE("mc: normal cdf") {
  CHECK(normal_cdf(0.0, 0.0, 1.0) == 0.5);
  CHECK(normal_cdf(1.959963984540054, 0.0, 1.0) ==
        doctest::Approx(0.975).epsilon(1e-9));
  CHECK(normal_cdf(-1.959963984540054, 0.0, 1.0) ==
        doctest::Approx(0.025).epsilon(1e-7));
  CHECK(normal_cdf(3.0, 1.0, 2.0) == normal_cdf(1.0, 0.0, 1.0));
}

TEST_CASE("mc: averaged Hill estimator on an exact Pareto grid") {
  // Deterministic Pareto(3) quantile grid: x_i = (i/(N+1))^(-1/3).
  const int N = 4096;
  std::vector<double> x(static_cast<std::size_t>(N));
  for (int i = 1; i <= N; ++i)
    x[static_cast<std::size_t>(i - 1)] =
        std::pow(static_cast<double>(i) / (N + 1), -1.0 / 3.0);
  const double idx = averaged_hill_tail_index(x);
  CHECK(std::abs(idx - 3.0) < 0.1);
  CHECK(idx == doctest::Approx(3.023477).epsilon(1e-4));

  CHECK_THROWS_AS(averaged_hill_tail_index({1.0, 2.0, 3.0}), domain_error);
  std::vector<double> mostly_neg(64, -1.0);
  for (int i = 0; i < 5; ++i) mostly_neg[static_cast<std::size_t>(i)] = 5.0 - i;
  CHECK_THROWS_AS(averaged_hill_tail_index(mostly_neg), domain_error);
}

TEST_CASE("mc: least-squares slope") {
  CHECK(fit_log_slope({1.0, 2.0, 3.0}, {3.0, 5.0, 7.0}) ==
        doctest::Approx(2.0).epsilon(1e-14));
  CHECK_THROWS_AS(fit_log_slope({1.0, 2.0}, {1.0}), domain_error);
  CHECK_THROWS_AS(fit_log_slope({1.0}, {1.0}), domain_error);
}

TEST_CASE("mc: worker resolution order") {
  CHECK(resolve_workers(5) == 5);
  setenv("PVAR_WORKERS", "3", 1);
  CHECK(resolve_workers(0) == 3);
  CHECK(resolve_workers(2) == 2);  // explicit request wins over the env
  setenv("PVAR_WORKERS", "not-a-number", 1);
  CHECK(resolve_workers(0) >= 1);  // falls back to hardware concurrency
  unsetenv("PVAR_WORKERS");
  CHECK(resolve_workers(0) >= 1);
}

TEST_CASE("mc: indexed worker pool is order-independent") {
  auto fill = [](int workers) {
    std::vector<double> out(64, 0.0);
    run_parallel(64, workers, [&](int i) {
      out[static_cast<std::size_t>(i)] = static_cast<double>(i) * i;
    });
    return out;
  };
  CHECK(fill(1) == fill(4));

  CHECK_THROWS_AS(run_parallel(8, 4,
                               [](int i) {
                                 if (i == 3)
                                   throw domain_error("task failure");
                               }),
                  domain_error);
  std::atomic<int> calls{0};
  run_parallel(0, 4, [&](int) { calls.fetch_add(1); });
  CHECK(calls.load() == 0);
}

TEST_CASE("mc: experiment configuration validation") {
  const ExperimentConfig base;
  CHECK_NOTHROW(base.validate());

  auto expect = [&](void (*mutate)(ExperimentConfig&), const char* fragment) {
    ExperimentConfig cfg;
    mutate(cfg);
    CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains(fragment),
                         config_error);
  };

  expect([](ExperimentConfig& c) { c.experiment = "bogus"; }, "must be one of");
  expect([](ExperimentConfig& c) { c.alpha = 0.0; }, "alpha must be > 0");
  expect([](ExperimentConfig& c) { c.beta = 2.1; }, "beta must lie");
  expect([](ExperimentConfig& c) { c.beta = -0.5; }, "beta must lie");
  expect([](ExperimentConfig& c) { c.p = 0.0; }, "p must be > 0");
  expect([](ExperimentConfig& c) { c.p = c.beta; },
         "p equals the driver's stability index beta");
  expect([](ExperimentConfig& c) { c.k = 0; }, "k must lie in [1, 8]");
  expect([](ExperimentConfig& c) { c.k = 9; }, "k must lie in [1, 8]");
  expect([](ExperimentConfig& c) { c.sigma = 0.0; }, "sigma must be > 0");
  expect([](ExperimentConfig& c) { c.c0 = 0.0; }, "c0 must be nonzero");
  expect(
      [](ExperimentConfig& c) {
        c.beta = 0.0;
        c.lambda = 0.0;
      },
      "needs lambda > 0");
  expect([](ExperimentConfig& c) { c.t_past = 0.0; }, "t_past must be > 0");
  expect([](ExperimentConfig& c) { c.n_grid = {}; }, "must not be empty");
  expect([](ExperimentConfig& c) { c.n_grid = {6}; }, "powers of two >= 8");
  expect([](ExperimentConfig& c) { c.n_grid = {48}; }, "powers of two >= 8");
  expect([](ExperimentConfig& c) { c.n_grid = {64, 64}; },
         "strictly increasing");
  expect([](ExperimentConfig& c) { c.reps = 0; }, "reps must be >= 1");
  expect([](ExperimentConfig& c) { c.workers = -1; }, "workers must be >= 0");
  expect([](ExperimentConfig& c) { c.path_options.m_sub = 3; },
         "m_sub must be a power of two");
  expect([](ExperimentConfig& c) { c.path_options.far_tol = 0.0; },
         "far_tol must be > 0");
  expect([](ExperimentConfig& c) { c.path_options.t_trunc = 0.0; },
         "t_trunc must be > 0");
  expect([](ExperimentConfig& c) { c.path_options.poly_order = 1; },
         "poly_order must lie in [2, 24]");

  ExperimentConfig table;
  table.kernel_family = KernelFamily::kTableDefined;
  CHECK_THROWS_WITH_AS(table.make_kernel(), doctest::Contains("table kernels"),
                       config_error);
}

namespace {

ExperimentConfig tiny_ergodic_config(int workers) {
  ExperimentConfig cfg;
  cfg.experiment = "ergodic";
  cfg.alpha = 0.25;
  cfg.beta = 2.0;
  cfg.p = 1.0;
  cfg.k = 1;
  cfg.n_grid = {64, 128};
  cfg.reps = 6;
  cfg.seed = 123;
  cfg.workers = workers;
  return cfg;
}

}  // namespace

TEST_CASE("mc: small ergodic experiment produces a complete report") {
  MCReport rep = run_ergodic_experiment(tiny_ergodic_config(2));
  CHECK(rep.experiment == "ergodic");
  REQUIRE(rep.grid.size() == 2);
  CHECK(rep.grid[0].n == 64);
  CHECK(rep.grid[1].n == 128);
  CHECK(rep.grid[0].samples.size() == 6);
  CHECK(rep.runtime_seconds > 0.0);

  auto has_metric = [&](const std::string& name) {
    for (const auto& m : rep.metrics)
      if (m.name == name) return true;
    return false;
  };
  CHECK(has_metric("mean_rel_err_n64"));
  CHECK(has_metric("mean_rel_err_n128"));
  CHECK(has_metric("limit_value"));
  CHECK(has_metric("mad_shrink_ratio"));
  // Six reps is far too few to gate on; the verdict is not asserted here.
}

TEST_CASE("mc: reports are byte-identical across worker counts") {
  MCReport a = run_experiment(tiny_ergodic_config(1));
  MCReport b = run_experiment(tiny_ergodic_config(3));
  CHECK(a.to_json(false) == b.to_json(false));
}

TEST_CASE("mc: report csv layout") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "pvar_test_mc";
  fs::create_directories(dir);
  const std::string file = (dir / "report.csv").string();

  MCReport rep = run_ergodic_experiment(tiny_ergodic_config(2));
  rep.write_csv(file);

  std::ifstream in(file);
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == "# pvar-report v1,ergodic");
  REQUIRE(std::getline(in, line));
  CHECK(line == "metric,name,value,reference,tolerance,gated,pass");
  int metric_rows = 0, sample_rows = 0;
  bool saw_sample_header = false;
  while (std::getline(in, line)) {
    if (line.rfind("metric,", 0) == 0) ++metric_rows;
    if (line == "sample,n,rep,value") saw_sample_header = true;
    if (line.rfind("sample,6", 0) == 0 || line.rfind("sample,1", 0) == 0)
      ++sample_rows;
  }
  CHECK(metric_rows == static_cast<int>(rep.metrics.size()));
  CHECK(saw_sample_header);
  CHECK(sample_rows == 12);  // 2 grid sizes x 6 reps

  CHECK_THROWS_AS(rep.write_csv((dir / "no" / "dir.csv").string()),
                  config_error);
  fs::remove_all(dir);
}
