#ifndef PVAR_SIMULATE_HPP_
#define PVAR_SIMULATE_HPP_

#include <optional>
#include <string>
#include <vector>

#include "pvar/jumps.hpp"
#include "pvar/kernel.hpp"
#include "pvar/rng.hpp"

namespace pvar {

// Knobs of the stable-driven path engine.  The defaults keep the combined
// discretization bias of the simulated marginal law around 1e-4 relative,
// which is far below every statistical tolerance in the harness.
struct StablePathOptions {
  int m_sub = 16;        // sub-lattice mesh per unit lag (power of two)
  double far_tol = 1e-4; // relative target for far-field / truncation errors
  double t_trunc = 4.0;  // time window resolved on the lattice before the
                         // far-past representation takes over (pure power)
                         // or the kernel is truncated (decaying kernels)
  int poly_order = 12;   // far-past polynomial order (pure power kernels)
};

struct DriverDescriptor {
  std::string type;   // "compound_poisson" or "stable"
  double beta = 2.0;  // stable index (stable drivers)
  double sigma = 1.0; // stable scale
  double lambda = 0.0;  // jump intensity (compound Poisson)
  SeedStream stream;  // stream that regenerates the stable noise verbatim
};

struct SamplePath {
  int n = 0;                  // values at i/n for i = 0..n
  std::vector<double> values; // length n + 1
  KernelSpec kernel;
  DriverDescriptor driver;
  JumpRecord jumps;           // populated for compound-Poisson drivers
  // Relative bound (in the path's own scale) on everything the generator
  // did not represent exactly: far-past cutoff, series remainders, and the
  // sub-lattice bias of the singular cell.
  double truncation_error_bound = 0.0;

  double t_of(int i) const { return static_cast<double>(i) / n; }
};

// Exact path of the compound-Poisson-driven moving average on the grid i/n,
// i = 0..n: a finite sum over the record's jumps, no discretization error.
SamplePath simulate_cp_driven_path(const KernelSpec& spec,
                                   const JumpRecord& record, int n);

// Stable-driven path on the grid i/n.  Pure-power kernels in the
// stationary-increments mode (the fractional self-similar case) use the
// lag-ladder + far-past polynomial construction; decaying kernels use the
// ladder with a hard truncation at t_trunc whose L^beta tail bound must
// meet far_tol (tolerance_error with the required window otherwise).
// Requires alpha < 1 - 1/beta for the fractional case.
SamplePath simulate_stable_driven_path(const KernelSpec& spec, double beta,
                                       double sigma, int n, SeedStream stream,
                                       const StablePathOptions& opt = {});

// Fractional stable motion with unit kernel constant: the tangent process
// of every admissible stationary-increments kernel with the same (alpha,
// beta).  Convenience wrapper over the pure-power engine.
SamplePath simulate_tangent_lfsm(double alpha, double beta, double c0,
                                 double sigma, int n, SeedStream stream,
                                 const StablePathOptions& opt = {});

// The small-scale limit variable of the jump regime:
//   Z = |c0|^p sum_m |J_m|^p V(u_m),  V(u) = sum_{l>=0} |h_k(l + u)|^p,
// over the jumps of the record inside (0, 1].  The series is truncated with
// a certified tail bound (needs alpha < k - 1/p).  The marks u_m are drawn
// uniformly unless forced_marks supplies them (used by coupled tests, which
// pass the fractional parts of n * T_m).
struct LimitSample {
  double value = 0.0;
  std::vector<double> contributions;  // one term per jump
  double truncation_error_bound = 0.0;
};
LimitSample simulate_limit_Z(const KernelSpec& spec, const JumpRecord& record,
                             double p, int k, CounterRng& rng,
                             const std::vector<double>* forced_marks = nullptr,
                             double tol = 1e-9);

// Stationary difference process V_t = int h_k(t - s) dL_s at t = 1..len for
// a unit-scale symmetric beta-stable driver.  Values within one call share
// their noise (exact joint law); independent segments come from distinct
// streams.  Requires (k - alpha) beta > 1.
std::vector<double> simulate_V_process(double alpha, double beta, int k,
                                       int len, SeedStream stream,
                                       const StablePathOptions& opt = {});

// The smooth-regime limit functional int_0^1 |F_u|^p du with
// F_u = int_{-infty}^u g^{(k)}(u - s) dL_s, evaluated on a midpoint grid of
// fine_n cells together with a half-resolution refinement estimate.
struct FIntegralResult {
  double value = 0.0;
  std::vector<double> f_values;       // F at the fine_n midpoints
  double grid_error_estimate = 0.0;   // |full - half resolution|
  double truncation_error_bound = 0.0;
};

// Compound-Poisson driver: exact sums over the record.  The record window
// must dominate the kernel memory; pure-power kernels are refused (their
// k-th derivative is not square-summable over the infinite past, so no
// record window can represent F faithfully).
FIntegralResult simulate_F_integral_cp(const KernelSpec& spec,
                                       const JumpRecord& record, double p,
                                       int k, int fine_n);

// Stable driver, coupled with the path through one shared noise lattice:
// both objects are functionals of the identical discretized driver, so the
// comparison n^{pk-1} V(p;k)_n vs int |F|^p du carries no independent
// randomness.  Decaying kernels only.
struct SmoothPair {
  SamplePath path;
  FIntegralResult f_integral;
};
SmoothPair simulate_smooth_pair_stable(const KernelSpec& spec, double beta,
                                       double sigma, int n, int fine_n,
                                       double p, int k, SeedStream stream,
                                       const StablePathOptions& opt = {});

// Coupled smooth pair for a compound-Poisson record (both exact).
SmoothPair simulate_smooth_pair_cp(const KernelSpec& spec,
                                   const JumpRecord& record, int n, int fine_n,
                                   double p, int k);

// CSV exports with a versioned header line.
void write_path_csv(const SamplePath& path, const std::string& file);
void write_jumps_csv(const JumpRecord& record, const std::string& file);

}  // namespace pvar

#endif  // PVAR_SIMULATE_HPP_
