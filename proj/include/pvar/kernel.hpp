#ifndef PVAR_KERNEL_HPP_
#define PVAR_KERNEL_HPP_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace pvar {

// Exact binomial coefficient from a Pascal table; supported for n <= 8,
// which is the largest difference order the toolkit accepts.
double binomial_exact(int n, int j);
constexpr int kMaxDifferenceOrder = 8;

// x_+^alpha with the convention 0^alpha := 0 (alpha > 0 throughout).
double power_plus(double x, double alpha);

// k-th iterated backward difference of a function at unit lag:
//   (D^k f)(x) = sum_{j=0}^k (-1)^j C(k,j) f(x - j).
double dk_apply(const std::function<double(double)>& f, double x, int k);

// h_k(x) = (D^k t_+^alpha)(x): the k-th difference of the pure power kernel.
// Piecewise smooth with kinks at 0..k, sign-alternating lobes, and decay
// h_k(x) ~ alpha (alpha-1) ... (alpha-k+1) x^(alpha-k) as x -> infinity.
// Direct summation is used for small x; for large x an asymptotic expansion
// avoids the catastrophic cancellation of the alternating sum.
double h_k(double x, double alpha, int k);

// Antiderivative: integral of h_k over [0, x].
double h_k_antiderivative(double x, double alpha, int k);

// Average of h_k over the cell [a, b] (exact via the antiderivative where it
// is stable, Gauss-Legendre inside smooth pieces otherwise).
double h_k_cell_average(double a, double b, double alpha, int k);

// Leading decay coefficient alpha (alpha-1)...(alpha-k+1).
double h_k_decay_coefficient(double alpha, int k);

// Coefficients c_m of the large-x expansion h_k(x) = sum_m c_m x^(alpha-k-m);
// c_0 is the decay coefficient above.  Valid (rapidly convergent) for
// x greater than roughly 2k + 2.
std::vector<double> h_k_series_coefficients(double alpha, int k);

// Fitted tail constant: max over [lo, hi] of |h_k(x)| x^(k-alpha).  Used by
// the decay-bound checks and the series-truncation estimates.
double h_k_tail_constant(double alpha, int k, double lo, double hi);

// Cached-coefficient evaluator for hot loops (same value as h_k()).
class HkEvaluator {
 public:
  HkEvaluator(double alpha, int k);
  double operator()(double x) const;
  double alpha() const { return alpha_; }
  int k() const { return k_; }

 private:
  double alpha_;
  int k_;
  double x_switch_;
  std::vector<double> series_;  // coefficients of x^(alpha-k-m), m = 0,1,...
};

enum class KernelFamily {
  kPurePower,          // g(t) = c0 t_+^alpha
  kPowerTimesExpDecay, // g(t) = c0 t_+^alpha exp(-decay_rate t)
  kTableDefined,       // monotone-cubic interpolation of samples, 0 outside
};

enum class G0Mode {
  kZero,    // stationary moving average: X_t = int g(t-s) dL_s
  kEqualG,  // stationary increments: X_t = int {g(t-s) - g(-s)} dL_s, X_0 = 0
};

struct KernelSpec {
  KernelFamily family = KernelFamily::kPurePower;
  double alpha = 0.5;
  double c0 = 1.0;
  int k_max = kMaxDifferenceOrder;  // largest difference order caller will use
  double theta = 2.0;               // integrability exponent for admissibility
  G0Mode g0_mode = G0Mode::kEqualG;
  double decay_rate = 1.0;          // PowerTimesExpDecay only
  std::vector<double> table_x;      // TableDefined only; table_x[0] == 0
  std::vector<double> table_y;

  void validate() const;  // structural checks; throws config_error
};

std::string to_string(KernelFamily family);
KernelFamily kernel_family_from_string(const std::string& s);
std::string to_string(G0Mode mode);
G0Mode g0_mode_from_string(const std::string& s);

// g itself, and its j-th derivative (closed-form for the analytic families;
// centered finite differences for table kernels).
double g_eval(const KernelSpec& spec, double t);
double g_deriv(const KernelSpec& spec, double t, int j);

// Discrete convolution kernel of the k-th increment on the grid i/n:
//   g_{i,n}(x) = sum_{j=0}^k (-1)^j C(k,j) g((i-j)/n - x).
// For the pure power family this equals c0 n^(-alpha) h_k(i - n x).
double g_in_eval(const KernelSpec& spec, int i, int n, double x, int k);

struct AdmissibilityReport {
  bool admissible = false;
  bool near_field_ok = false;   // |g^{(k)}(t)| <= K t^(alpha-k) on (0, delta]
  bool far_field_ok = false;    // g^{(k)} in L^theta((delta, infinity))
  bool base_ok = false;         // g itself compatible with the g0 mode
  double near_field_constant = 0.0;
  double delta = 1.0;
  std::vector<std::string> messages;
};

// Checks the standing kernel assumptions for difference order k: power-law
// behaviour at the origin, integrable k-th derivative in the far field, and
// compatibility of the base kernel with the chosen g0 mode.
AdmissibilityReport check_assumption_A(const KernelSpec& spec, int k);

// Monotone cubic interpolant (Fritsch-Carlson): preserves monotonicity of
// the data, C^1, exact at nodes.  Used by table-defined kernels.
class MonotoneCubic {
 public:
  MonotoneCubic() = default;
  MonotoneCubic(std::vector<double> xs, std::vector<double> ys);
  double operator()(double x) const;  // 0 outside [xs.front(), xs.back()]
  bool empty() const { return xs_.empty(); }

 private:
  std::vector<double> xs_, ys_, slopes_;
};

}  // namespace pvar

#endif  // PVAR_KERNEL_HPP_
