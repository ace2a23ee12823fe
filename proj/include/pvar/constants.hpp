#ifndef PVAR_CONSTANTS_HPP_
#define PVAR_CONSTANTS_HPP_

#include <string>
#include <vector>

#include "pvar/quadrature.hpp"

namespace pvar {

// a_p = 2 int_0^inf (1 - cos u) u^(-1-p) du for p in (0,1): the normalizer
// of the |x|^p integral representation.  Evaluated by quadrature plus an
// analytic oscillatory-tail correction; the closed Gamma form is reserved
// for tests so the two routes stay independent.
QuadResult a_p(double p, double tol = 1e-11);

// Reproduces |x|^p through the representation
//   |x|^p = a_p^{-1} * 2 int_0^inf (1 - cos(u x)) u^(-1-p) du,
// integrating in u directly (no rescaling shortcut).
QuadResult abs_power_via_integral(double x, double p, double tol = 1e-9);

// int_R |h_k(x; alpha)|^beta dx.  Requires (k - alpha) beta > 1; the far
// tail is summed by an asymptotic expansion, not brute-force quadrature.
QuadResult hk_beta_norm(double alpha, double beta, int k, double tol = 1e-11);

// E|Z|^p for Z symmetric stable with unit scale (char. fn exp(-|u|^beta)),
// 0 < p < beta, p < 2.  Uses the extended a_p on p in (0,2).
QuadResult sas_abs_moment(double p, double beta, double tol = 1e-11);

// First-order ergodic limit m_p = |c0 sigma|^p * N^{p/beta} * E|Z|^p with
// N = hk_beta_norm.  Requires p < beta and (k - alpha) beta > 1.
QuadResult m_p(double alpha, double beta, double p, int k, double c0 = 1.0,
               double sigma = 1.0, double tol = 1e-10);

// tau(rho) = (rho - 1) / (Gamma(2 - rho) |cos(pi rho / 2)|), rho in (1,2):
// the tail constant P(S > x) ~ tau(rho) eta^rho x^(-rho) of a totally
// right-skewed rho-stable law with scale eta.
double tau_constant(double rho);

// Phi(x) = E|W + x|^p - E|W|^p for W symmetric beta-stable with scale rho0.
// Quadrature for moderate x; for large x the asymptotic x^p - E|W|^p with a
// folded error bound.
QuadResult phi_fluctuation(double x, double rho0, double beta, double p,
                           double tol = 1e-9);

// kappa = (alpha^{1/(1-alpha)} / (1-alpha)) *
//         int_0^inf Phi_{rho0}(y) y^{-1-1/(1-alpha)} dy,
// rho0 = hk_beta_norm(alpha, beta, 1)^{1/beta}.  First-order difference
// (k = 1) second-order theory; requires alpha < 1 - 1/beta and p < 1/(1-alpha).
QuadResult kappa_constant(double alpha, double beta, double p,
                          double tol = 1e-8);

// Scale of the skewed-stable second-order limit (k = 1):
//   sigma_tilde = |c0 sigma|^p (tau(beta) / tau(rho))^{1/rho} kappa,
// rho = (1 - alpha) beta in (1,2).
QuadResult sigma_tilde(double alpha, double beta, double p, double c0 = 1.0,
                       double sigma = 1.0, double tol = 1e-8);

// Covariance coefficient theta(i) = cov(|V_1|^p, |V_{1+i}|^p) of the
// normalized stationary difference process V_t = int h_k(t-s) dL_s with unit
// scale driver.  The defining double integral is reduced analytically to a
// single r-integral before quadrature.  Requires p < beta/2 and
// (k - alpha) beta > 1.
QuadResult theta_i(int i, double alpha, double beta, int k, double p,
                   double tol = 1e-8);

struct ThetaSeries {
  std::vector<double> values;  // theta(0..I)
  double tail_bound = 0.0;     // bound on 2 * sum_{i > I} |theta(i)|
  double fitted_decay = 0.0;   // fitted power r in |theta(i)| ~ K i^{-r}
};

// Gaussian second-order variance
//   eta^2 = |c0 sigma|^{2p} (theta(0) + 2 sum_{i>=1} theta(i)),
// summed adaptively with a fitted power-decay remainder (doubled, to stay
// conservative).  Throws tolerance_error if the fitted decay is <= 1.
QuadResult eta_sq(double alpha, double beta, int k, double p, double c0 = 1.0,
                  double sigma = 1.0, double tol = 1e-6,
                  ThetaSeries* series_out = nullptr);

// Bundle of every constant a given regime needs, with parameter echo and a
// combined error bound; serializable and cacheable by content hash.
struct LimitConstants {
  std::string regime;  // "ergodic", "jump", "smooth", "gaussian2", "stable2"
  double alpha = 0.0, beta = 0.0, p = 0.0;
  int k = 1;
  double c0 = 1.0, sigma = 1.0;
  double tol = 1e-8;

  double a_p_value = 0.0;
  double hk_norm = 0.0;
  double sas_moment = 0.0;
  double m_p_value = 0.0;
  double tau_beta = 0.0;
  double tau_rho = 0.0;
  double rho = 0.0;
  double kappa_value = 0.0;
  double sigma_tilde_value = 0.0;
  double eta_sq_value = 0.0;
  std::vector<double> theta_series;
  double theta_tail_bound = 0.0;
  double error_bound = 0.0;

  std::string to_json_string() const;
  static LimitConstants from_json_string(const std::string& s);
};

LimitConstants compute_limit_constants(const std::string& regime, double alpha,
                                       double beta, double p, int k, double c0,
                                       double sigma, double tol);

// Deterministic content hash of the parameter tuple (FNV-1a over a canonical
// encoding); used as the cache file name.
std::string constants_cache_key(const std::string& regime, double alpha,
                                double beta, double p, int k, double c0,
                                double sigma, double tol);

// Looks the tuple up in cache_dir (if non-empty), recomputing and writing
// back on miss.  Cached entries echo their parameters and are revalidated on
// load; a mismatch (hash collision or stale schema) forces recomputation.
LimitConstants load_or_compute_constants(const std::string& cache_dir,
                                         const std::string& regime,
                                         double alpha, double beta, double p,
                                         int k, double c0, double sigma,
                                         double tol);

}  // namespace pvar

#endif  // PVAR_CONSTANTS_HPP_
