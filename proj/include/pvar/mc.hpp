#ifndef PVAR_MC_HPP_
#define PVAR_MC_HPP_

#include <functional>
#include <string>
#include <vector>

#include "pvar/jumps.hpp"
#include "pvar/kernel.hpp"
#include "pvar/simulate.hpp"

namespace pvar {

// ---------------------------------------------------------------------------
// Sample summaries and distribution distances used by the experiments.
// ---------------------------------------------------------------------------
double mean_of(const std::vector<double>& x);
double median_of(std::vector<double> x);
double mad_of(std::vector<double> x);  // median absolute deviation
double quantile_of(std::vector<double> x, double q);

// Median of bucket means over equally sized contiguous buckets; robust
// location estimate for heavy-tailed per-rep statistics.
double median_of_means(const std::vector<double>& x, int buckets);

double ks_distance_to_cdf(std::vector<double> sample,
                          const std::function<double(double)>& cdf);
double ks_distance_two_sample(std::vector<double> a, std::vector<double> b);

double normal_cdf(double x, double mean, double sd);

// Averaged Hill estimator of the upper tail index: the Hill estimate is
// averaged over order-statistic counts k in [lo_frac, hi_frac] * sample
// size.  Requires the involved order statistics to be positive.
double averaged_hill_tail_index(std::vector<double> sample,
                                double lo_frac = 1.0 / 16.0,
                                double hi_frac = 1.0 / 8.0);

// Least-squares slope of y against x (used for empirical rate fits).
double fit_log_slope(const std::vector<double>& x,
                     const std::vector<double>& y);

// ---------------------------------------------------------------------------
// Deterministic worker pool: tasks are indexed, every index derives its own
// random stream, and results land by index, so reports are byte-identical
// for any worker count.  The requested count 0 resolves to PVAR_WORKERS or
// the hardware concurrency.
// ---------------------------------------------------------------------------
int resolve_workers(int requested);
void run_parallel(int tasks, int workers,
                  const std::function<void(int)>& task);

// ---------------------------------------------------------------------------
// Experiment configuration: flat parameters mirrored by the config file and
// the CLI.  Tolerances are named so reports can echo which gate a verdict
// used.
// ---------------------------------------------------------------------------
struct ToleranceTable {
  double ergodic_mean_rel = 0.05;
  double jump_coupled_median_rel = 0.10;
  double jump_min_separation = 1.0 / 128.0;
  double jump_ks = 0.08;
  double smooth_median_rel = 0.05;
  double clt_ks = 0.10;
  double stable_tail_index_abs = 0.20;
  double stable_asymmetry_min = 1.0;
};

struct ExperimentConfig {
  std::string experiment = "ergodic";  // ergodic|jump|smooth|clt|stable2
  double alpha = 0.25;
  double beta = 1.5;  // stable index; 0 selects a compound-Poisson driver
  double p = 1.0;
  int k = 1;
  double c0 = 1.0;
  double sigma = 1.0;
  double lambda = 5.0;               // compound-Poisson intensity
  double t_past = 4.0;               // record window start (CP drivers)
  JumpLawConfig jump_law;            // CP jump size law
  KernelFamily kernel_family = KernelFamily::kPurePower;
  G0Mode g0_mode = G0Mode::kEqualG;
  double decay_rate = 1.0;           // decaying kernel families
  std::vector<int> n_grid = {1024, 4096};
  int reps = 200;
  unsigned long long seed = 1;
  int workers = 0;  // 0 = resolve from PVAR_WORKERS / hardware
  StablePathOptions path_options;
  ToleranceTable tol;

  KernelSpec make_kernel() const;
  void validate() const;  // throws config_error on contradictions
};

// ---------------------------------------------------------------------------
// Report: per-grid-point summaries, named metrics with their gates, and an
// overall verdict.  The JSON form is canonical (sorted keys, shortest
// round-trip numbers); the runtime field can be excluded so outputs are
// comparable across worker counts.
// ---------------------------------------------------------------------------
struct MetricResult {
  std::string name;
  double value = 0.0;
  double reference = 0.0;
  double tolerance = 0.0;
  bool gated = false;  // informational when false
  bool pass = true;
};

struct GridSummary {
  int n = 0;
  double mean = 0.0, median = 0.0, mad = 0.0, q05 = 0.0, q95 = 0.0;
  std::vector<double> samples;  // per-rep statistic, exported to CSV only
};

struct MCReport {
  std::string experiment;
  std::string params_json;  // canonical echo of the configuration
  std::vector<GridSummary> grid;
  std::vector<MetricResult> metrics;
  double runtime_seconds = 0.0;
  bool all_pass = true;

  std::string to_json(bool include_runtime = true) const;
  void write_csv(const std::string& file) const;
};

MCReport run_ergodic_experiment(const ExperimentConfig& cfg);
MCReport run_jump_experiment(const ExperimentConfig& cfg);
MCReport run_smooth_experiment(const ExperimentConfig& cfg);
MCReport run_clt_experiment(const ExperimentConfig& cfg);
MCReport run_stable_limit_experiment(const ExperimentConfig& cfg);

// Dispatch on cfg.experiment.
MCReport run_experiment(const ExperimentConfig& cfg);

}  // namespace pvar

#endif  // PVAR_MC_HPP_
