#ifndef PVAR_STATISTICS_HPP_
#define PVAR_STATISTICS_HPP_

#include <string>
#include <vector>

namespace pvar {

// Which first-order limit the normalization targets.
enum class LimitRegime { kJump, kErgodic, kSmooth };

std::string to_string(LimitRegime regime);
LimitRegime regime_from_string(const std::string& s);

// k-th order backward differences of a sampled path: for i = k..n,
//   d_i = sum_{j=0}^k (-1)^j C(k,j) x_{i-j}.
// Returns n - k + 1 values.
std::vector<double> increments(const std::vector<double>& values, int k);

// Raw power variation sum_{i=k}^n |d_i|^p of the k-th differences.
double power_variation(const std::vector<double>& values, double p, int k);

// Scale exponent e such that n^e * V(p;k)_n is the normalized statistic:
//   jump     e = alpha p
//   ergodic  e = p (alpha + 1/beta) - 1
//   smooth   e = p k - 1
double scale_exponent(LimitRegime regime, double alpha, double beta, double p,
                      int k);

// Checks the witness inequalities under which the regime's limit theorem
// applies; throws domain_error naming the violated inequality.  beta <= 0
// means a finite-activity driver, for which the beta-dependent conditions
// are vacuous.
void check_regime(LimitRegime regime, double alpha, double beta, double p,
                  int k);

struct PowerVariationResult {
  double raw = 0.0;     // sum |d_i|^p
  double scaled = 0.0;  // n^exponent * raw
  double exponent = 0.0;
  int n = 0;
  double p = 0.0;
  int k = 1;
};

// Normalized power variation of a path sampled at i/n, i = 0..n.
PowerVariationResult scale_statistic(const std::vector<double>& values,
                                     double p, int k, LimitRegime regime,
                                     double alpha, double beta);

// Rate exponent gamma of the second-order (fluctuation) statistic
// n^gamma (scaled - limit): 1 - 1/((1-alpha) beta) for first differences,
// 1/2 for higher orders.  Validity: p < beta/2 and, for k = 1,
// (1-alpha) beta in (1,2); for k >= 2, alpha < k - 2/beta.
double second_order_rate_exponent(double alpha, double beta, int k);

// n^gamma (n^{p(alpha+1/beta)-1} V(p;k)_n - limit_value).
double second_order_statistic(const std::vector<double>& values, double p,
                              int k, double alpha, double beta,
                              double limit_value);

// Self-similarity estimator from one dyadic coarsening of first differences:
//   H_hat = (log2(V_coarse / V_fine) + 1) / p.
// Throws domain_error on degenerate input (zero or non-finite variation,
// or an odd sample count that admits no exact coarsening).
struct RatioEstimate {
  double H_hat = 0.0;
  double log2_ratio = 0.0;
  double v_fine = 0.0;
  double v_coarse = 0.0;
};
RatioEstimate ratio_estimator(const std::vector<double>& values, double p);

// Joint scaling-law regression: fits per-power slopes of log V(p;k) against
// log n over a dyadic subsampling grid, then inverts the two-branch scaling
// model  s(p) = max(1 - H p, -a p)  for (H, a) and the branch-crossing
// power.  For stable drivers the crossing estimates the stability index and
// H - a = 1/beta; for finite-activity drivers the lower branch has H = k.
struct PowerLawFit {
  std::vector<double> powers;     // powers actually used in the fit
  std::vector<double> slopes;     // fitted d log V / d log n, one per power
  std::vector<double> r_squared;  // per-power regression quality
  double H_hat = 0.0;             // lower-branch coefficient
  double alpha_hat = 0.0;         // upper-branch coefficient
  double beta_hat = 0.0;          // branch-crossing power, 1/(H - alpha)
  int split_index = 0;            // first power on the upper branch
  bool augmented = false;  // powers were extended internally to straddle the
                           // crossing; flagged because the caller's list did
                           // not identify the model on its own
  bool conclusive = true;  // false if any per-power fit has R^2 < 0.9 or the
                           // inversion is degenerate
  std::string message;
};
PowerLawFit log_power_regression(const std::vector<double>& values,
                                 const std::vector<double>& powers, int k,
                                 const std::vector<int>& n_grid);

}  // namespace pvar

#endif  // PVAR_STATISTICS_HPP_
