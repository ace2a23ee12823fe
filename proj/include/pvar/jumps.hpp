#ifndef PVAR_JUMPS_HPP_
#define PVAR_JUMPS_HPP_

#include <cstddef>
#include <string>
#include <vector>

#include "pvar/rng.hpp"

namespace pvar {

// Jump size laws for the compound-Poisson driver.  All are symmetric with
// mean zero, as required by the driver contract.
enum class JumpSizeLaw {
  kTwoPoint,         // +-a with probability 1/2 each
  kSymmetricPareto,  // sign * x_min * U^(-1/theta_index): tail index theta_index
  kTruncatedStable,  // symmetric stable(beta_js, sigma_js) conditioned to |J| <= bound
};

struct JumpLawConfig {
  JumpSizeLaw law = JumpSizeLaw::kTwoPoint;
  double a = 1.0;            // two-point magnitude
  double theta_index = 3.0;  // Pareto tail index (> 0)
  double x_min = 1.0;        // Pareto scale (> 0)
  double beta_js = 1.5;      // truncated-stable index
  double sigma_js = 1.0;     // truncated-stable scale
  double bound = 10.0;       // truncation bound (> 0)
};

// A realized compound-Poisson driver on the window [t0, t1]: finitely many
// jumps with strictly increasing times.  This record *is* the driver; every
// simulator consuming it produces exact (law-free) functionals of it, which
// is what makes coupled comparisons between different functionals valid.
struct JumpRecord {
  double t0 = 0.0;
  double t1 = 1.0;
  std::vector<double> times;  // strictly increasing, inside (t0, t1)
  std::vector<double> sizes;  // same length, nonzero

  std::size_t count() const { return times.size(); }
  // Sub-record of jumps with time in (a, b].
  JumpRecord restrict_to(double a, double b) const;
  void validate() const;  // throws domain_error on structural violations
};

// Homogeneous Poisson(lambda) arrivals on [t0, t1] with iid sizes.
JumpRecord sample_jumps(double lambda, const JumpLawConfig& law, double t0,
                        double t1, CounterRng& rng);

double sample_jump_size(const JumpLawConfig& law, CounterRng& rng);

// Second moment E J^2 of the size law (finite for all three laws; Pareto
// requires theta_index > 2).
double jump_size_second_moment(const JumpLawConfig& law);

std::string to_string(JumpSizeLaw law);
JumpSizeLaw jump_law_from_string(const std::string& s);

}  // namespace pvar

#endif  // PVAR_JUMPS_HPP_
