#include "pvar/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pvar/errors.hpp"

namespace pvar {
namespace {

// Pascal triangle up to n = 8.
const double kBinom[9][9] = {
    {1, 0, 0, 0, 0, 0, 0, 0, 0},
    {1, 1, 0, 0, 0, 0, 0, 0, 0},
    {1, 2, 1, 0, 0, 0, 0, 0, 0},
    {1, 3, 3, 1, 0, 0, 0, 0, 0},
    {1, 4, 6, 4, 1, 0, 0, 0, 0},
    {1, 5, 10, 10, 5, 1, 0, 0, 0},
    {1, 6, 15, 20, 15, 6, 1, 0, 0},
    {1, 7, 21, 35, 35, 21, 7, 1, 0},
    {1, 8, 28, 56, 70, 56, 28, 8, 1},
};

constexpr int kSeriesTerms = 96;

// Stirling subset numbers S(m, k) for k <= 8, m < k + kSeriesTerms, as
// doubles (exact until far beyond the magnitudes used here).
const std::vector<std::vector<double>>& stirling2_table() {
  static const std::vector<std::vector<double>> table = [] {
    const int kmax = kMaxDifferenceOrder;
    const int mmax = kmax + kSeriesTerms;
    std::vector<std::vector<double>> s(mmax + 1,
                                       std::vector<double>(kmax + 1, 0.0));
    s[0][0] = 1.0;
    for (int m = 1; m <= mmax; ++m)
      for (int k = 1; k <= kmax; ++k)
        s[m][k] = k * s[m - 1][k] + s[m - 1][k - 1];
    return s;
  }();
  return table;
}

double falling_product(double alpha, int k) {
  double p = 1.0;
  for (int r = 0; r < k; ++r) p *= (alpha - r);
  return p;
}

double factorial(int k) {
  double f = 1.0;
  for (int r = 2; r <= k; ++r) f *= r;
  return f;
}

// Coefficients of the large-x expansion
//   (D^k x^alpha)(x) = sum_{m >= k} binom(alpha, m) (-1)^(m+k) k! S(m,k)
//                      x^(alpha - m),
// obtained by expanding (x - j)^alpha = x^alpha sum_m binom(alpha,m)(-j/x)^m
// and using that the alternating binomial sum of j^m is (-1)^k k! S(m,k).
std::vector<double> series_coefficients(double alpha, int k) {
  const auto& s2 = stirling2_table();
  std::vector<double> c(kSeriesTerms);
  // binom(alpha, m) by recurrence, starting at m = k.
  double bin = 1.0;
  for (int m = 1; m <= k; ++m) bin *= (alpha - (m - 1)) / m;
  const double kfac = factorial(k);
  for (int t = 0; t < kSeriesTerms; ++t) {
    const int m = k + t;
    const double sgn = (t % 2 == 0) ? 1.0 : -1.0;  // (-1)^(m+k)
    c[t] = sgn * bin * kfac * s2[m][k];
    bin *= (alpha - m) / (m + 1);
  }
  return c;
}

double series_switch_point(int k) { return std::max(2.0 * k + 2.0, 12.0); }

double eval_series(const std::vector<double>& c, double alpha, int k,
                   double x) {
  // Terms are c[t] x^(alpha - k - t); ratio between consecutive terms is
  // O(k/x) < 1/2 at the switch point, so 96 terms are far more than enough.
  double acc = 0.0;
  double xp = std::pow(x, alpha - k);
  const double invx = 1.0 / x;
  for (int t = 0; t < kSeriesTerms; ++t) {
    const double term = c[t] * xp;
    acc += term;
    if (std::abs(term) < 1e-18 * std::abs(acc) && t > 4) break;
    xp *= invx;
  }
  return acc;
}

double direct_hk(double x, double alpha, int k) {
  double acc = 0.0;
  for (int j = 0; j <= k; ++j) {
    const double sgn = (j % 2 == 0) ? 1.0 : -1.0;
    acc += sgn * kBinom[k][j] * power_plus(x - j, alpha);
  }
  return acc;
}

void require_order(int k) {
  if (k < 1 || k > kMaxDifferenceOrder)
    throw domain_error("difference order k must lie in [1, 8]");
}

void require_alpha(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha))
    throw domain_error("alpha must be finite and > 0");
}

}  // namespace

double binomial_exact(int n, int j) {
  if (n < 0 || n > kMaxDifferenceOrder)
    throw domain_error("binomial_exact: n out of supported range [0, 8]");
  if (j < 0 || j > n) return 0.0;
  return kBinom[n][j];
}

double power_plus(double x, double alpha) {
  return x > 0.0 ? std::pow(x, alpha) : 0.0;
}

double dk_apply(const std::function<double(double)>& f, double x, int k) {
  require_order(k);
  double acc = 0.0;
  for (int j = 0; j <= k; ++j) {
    const double sgn = (j % 2 == 0) ? 1.0 : -1.0;
    acc += sgn * kBinom[k][j] * f(x - j);
  }
  return acc;
}

double h_k(double x, double alpha, int k) {
  require_order(k);
  require_alpha(alpha);
  if (x <= 0.0) return 0.0;
  if (k == 1) {
    // Stable closed form on the whole axis: x^a - (x-1)^a via expm1/log1p.
    if (x <= 1.0) return std::pow(x, alpha);
    return -std::pow(x, alpha) * std::expm1(alpha * std::log1p(-1.0 / x));
  }
  if (x <= series_switch_point(k)) return direct_hk(x, alpha, k);
  return eval_series(series_coefficients(alpha, k), alpha, k, x);
}

double h_k_antiderivative(double x, double alpha, int k) {
  require_order(k);
  require_alpha(alpha);
  if (x <= 0.0) return 0.0;
  const double ap1 = alpha + 1.0;
  if (k == 1) {
    if (x <= 1.0) return std::pow(x, ap1) / ap1;
    return -std::pow(x, ap1) * std::expm1(ap1 * std::log1p(-1.0 / x)) / ap1;
  }
  if (x <= series_switch_point(k)) {
    double acc = 0.0;
    for (int j = 0; j <= k; ++j) {
      const double sgn = (j % 2 == 0) ? 1.0 : -1.0;
      acc += sgn * kBinom[k][j] * power_plus(x - j, ap1);
    }
    return acc / ap1;
  }
  // The antiderivative is (D^k t^(alpha+1)) / (alpha+1): same expansion with
  // alpha replaced by alpha + 1.
  return eval_series(series_coefficients(ap1, k), ap1, k, x) / ap1;
}

double h_k_cell_average(double a, double b, double alpha, int k) {
  require_order(k);
  if (!(b > a)) throw domain_error("h_k_cell_average: need b > a");
  if (b <= 0.0) return 0.0;
  if (a < k + 2.0) {
    // Small-x region (contains the kinks): exact antiderivative difference,
    // numerically safe because no large-x cancellation occurs here.
    return (h_k_antiderivative(b, alpha, k) -
            h_k_antiderivative(a, alpha, k)) /
           (b - a);
  }
  // Smooth far region: 4-point Gauss-Legendre, relative error O((w/x)^8).
  static const double gx[4] = {-0.8611363115940526, -0.3399810435848563,
                               0.3399810435848563, 0.8611363115940526};
  static const double gw[4] = {0.3478548451374539, 0.6521451548625461,
                               0.6521451548625461, 0.3478548451374539};
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double acc = 0.0;
  for (int q = 0; q < 4; ++q) acc += gw[q] * h_k(mid + half * gx[q], alpha, k);
  return 0.5 * acc;
}

double h_k_decay_coefficient(double alpha, int k) {
  require_order(k);
  return falling_product(alpha, k);
}

std::vector<double> h_k_series_coefficients(double alpha, int k) {
  require_order(k);
  require_alpha(alpha);
  return series_coefficients(alpha, k);
}

double h_k_tail_constant(double alpha, int k, double lo, double hi) {
  require_order(k);
  if (!(hi > lo) || !(lo > k))
    throw domain_error("h_k_tail_constant: need k < lo < hi");
  const int npts = 1024;
  double best = 0.0;
  const double lr = std::log(hi / lo);
  for (int i = 0; i <= npts; ++i) {
    const double x = lo * std::exp(lr * i / npts);
    best = std::max(best, std::abs(h_k(x, alpha, k)) * std::pow(x, k - alpha));
  }
  return best;
}

HkEvaluator::HkEvaluator(double alpha, int k) : alpha_(alpha), k_(k) {
  require_order(k);
  require_alpha(alpha);
  x_switch_ = series_switch_point(k);
  if (k > 1) series_ = series_coefficients(alpha, k);
}

double HkEvaluator::operator()(double x) const {
  if (x <= 0.0) return 0.0;
  if (k_ == 1) return h_k(x, alpha_, 1);
  if (x <= x_switch_) return direct_hk(x, alpha_, k_);
  return eval_series(series_, alpha_, k_, x);
}

std::string to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::kPurePower: return "pure_power";
    case KernelFamily::kPowerTimesExpDecay: return "power_exp";
    case KernelFamily::kTableDefined: return "table";
  }
  return "?";
}

KernelFamily kernel_family_from_string(const std::string& s) {
  if (s == "pure_power") return KernelFamily::kPurePower;
  if (s == "power_exp") return KernelFamily::kPowerTimesExpDecay;
  if (s == "table") return KernelFamily::kTableDefined;
  throw config_error("unknown kernel family '" + s +
                     "' (expected pure_power, power_exp or table)");
}

std::string to_string(G0Mode mode) {
  return mode == G0Mode::kZero ? "zero" : "equal_g";
}

G0Mode g0_mode_from_string(const std::string& s) {
  if (s == "zero") return G0Mode::kZero;
  if (s == "equal_g") return G0Mode::kEqualG;
  throw config_error("unknown g0 mode '" + s +
                     "' (expected zero or equal_g)");
}

void KernelSpec::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha))
    throw config_error("kernel: alpha must be finite and > 0");
  if (c0 == 0.0 || !std::isfinite(c0))
    throw config_error("kernel: c0 must be finite and nonzero");
  if (k_max < 1 || k_max > kMaxDifferenceOrder)
    throw config_error("kernel: k_max must lie in [1, 8]");
  if (!(theta > 0.0) || theta > 2.0)
    throw config_error("kernel: theta must lie in (0, 2]");
  if (family == KernelFamily::kPowerTimesExpDecay && !(decay_rate > 0.0))
    throw config_error("kernel: decay_rate must be > 0");
  if (family == KernelFamily::kTableDefined) {
    if (table_x.size() != table_y.size() || table_x.size() < 4)
      throw config_error("kernel: table needs >= 4 matched samples");
    if (table_x.front() != 0.0)
      throw config_error("kernel: table must start at t = 0");
    for (std::size_t i = 1; i < table_x.size(); ++i)
      if (!(table_x[i] > table_x[i - 1]))
        throw config_error("kernel: table abscissae must increase strictly");
  }
}

namespace {

const MonotoneCubic& table_interp(const KernelSpec& spec) {
  // Table kernels are few and long-lived; a tiny cache keyed by the data
  // pointer keeps evaluation allocation-free.
  thread_local const std::vector<double>* key = nullptr;
  thread_local MonotoneCubic interp;
  if (key != &spec.table_x) {
    interp = MonotoneCubic(spec.table_x, spec.table_y);
    key = &spec.table_x;
  }
  return interp;
}

}  // namespace

double g_eval(const KernelSpec& spec, double t) {
  switch (spec.family) {
    case KernelFamily::kPurePower:
      return spec.c0 * power_plus(t, spec.alpha);
    case KernelFamily::kPowerTimesExpDecay:
      return t > 0.0
                 ? spec.c0 * std::pow(t, spec.alpha) * std::exp(-spec.decay_rate * t)
                 : 0.0;
    case KernelFamily::kTableDefined:
      return table_interp(spec)(t);
  }
  throw domain_error("g_eval: unknown kernel family");
}

double g_deriv(const KernelSpec& spec, double t, int j) {
  if (j < 0 || j > kMaxDifferenceOrder)
    throw domain_error("g_deriv: order out of range");
  if (j == 0) return g_eval(spec, t);
  switch (spec.family) {
    case KernelFamily::kPurePower:
      return t > 0.0 ? spec.c0 * falling_product(spec.alpha, j) *
                           std::pow(t, spec.alpha - j)
                     : 0.0;
    case KernelFamily::kPowerTimesExpDecay: {
      if (t <= 0.0) return 0.0;
      // Leibniz rule on t^alpha * exp(-lambda t).
      double acc = 0.0;
      for (int r = 0; r <= j; ++r)
        acc += kBinom[j][r] * falling_product(spec.alpha, r) *
               std::pow(t, spec.alpha - r) *
               std::pow(-spec.decay_rate, j - r);
      return spec.c0 * acc * std::exp(-spec.decay_rate * t);
    }
    case KernelFamily::kTableDefined: {
      // Central differences on the interpolant.
      const double h = (spec.table_x.back() - spec.table_x.front()) /
                       (8.0 * static_cast<double>(spec.table_x.size()));
      if (j == 1)
        return (g_eval(spec, t + h) - g_eval(spec, t - h)) / (2.0 * h);
      return (g_deriv(spec, t + h, j - 1) - g_deriv(spec, t - h, j - 1)) /
             (2.0 * h);
    }
  }
  throw domain_error("g_deriv: unknown kernel family");
}

double g_in_eval(const KernelSpec& spec, int i, int n, double x, int k) {
  require_order(k);
  if (n < 1) throw domain_error("g_in_eval: n must be >= 1");
  // The g0 part cancels in the alternating sum (the binomial coefficients
  // sum to zero for k >= 1), so only g enters.
  double acc = 0.0;
  for (int j = 0; j <= k; ++j) {
    const double sgn = (j % 2 == 0) ? 1.0 : -1.0;
    acc += sgn * kBinom[k][j] *
           g_eval(spec, (static_cast<double>(i) - j) / n - x);
  }
  return acc;
}

AdmissibilityReport check_assumption_A(const KernelSpec& spec, int k) {
  spec.validate();
  require_order(k);
  AdmissibilityReport rep;
  rep.delta = 1.0;
  std::ostringstream msg;

  if (k > spec.k_max) {
    rep.messages.push_back("requested order exceeds declared k_max");
    return rep;
  }

  // Near field: |g^{(k)}(t)| <= K t^(alpha - k) on (0, delta].  For the
  // analytic families the ratio is bounded by construction; fit K by
  // sampling (also covers table kernels, where it is a genuine check).
  {
    double kfit = 0.0;
    bool finite = true;
    for (int i = 1; i <= 256; ++i) {
      const double t = rep.delta * i / 256.0;
      const double ratio = std::abs(g_deriv(spec, t, k)) *
                           std::pow(t, static_cast<double>(k) - spec.alpha);
      if (!std::isfinite(ratio)) { finite = false; break; }
      kfit = std::max(kfit, ratio);
    }
    rep.near_field_ok = finite && kfit < 1e12;
    rep.near_field_constant = kfit;
    if (!rep.near_field_ok)
      rep.messages.push_back(
          "near-field bound |g^(k)(t)| <= K t^(alpha-k) failed on (0,1]");
  }

  // Far field: g^{(k)} in L^theta((delta, infinity)).
  switch (spec.family) {
    case KernelFamily::kPurePower: {
      const bool decay_ok = spec.alpha < k;
      const bool integrable = (k - spec.alpha) * spec.theta > 1.0;
      rep.far_field_ok = decay_ok && integrable;
      if (!decay_ok)
        rep.messages.push_back("pure power: alpha < k violated");
      if (!integrable)
        rep.messages.push_back(
            "pure power: far-field integrability (k - alpha) * theta > 1 "
            "violated");
      break;
    }
    case KernelFamily::kPowerTimesExpDecay:
      rep.far_field_ok = true;  // exponential factor dominates any power
      break;
    case KernelFamily::kTableDefined:
      rep.far_field_ok = true;  // compact support
      break;
  }

  // Base kernel vs. the g0 mode.
  if (spec.g0_mode == G0Mode::kZero) {
    if (spec.family == KernelFamily::kPurePower) {
      rep.base_ok = false;
      rep.messages.push_back(
          "pure power with zero base mode: g is unbounded and not "
          "integrable; use the stationary-increments mode");
    } else {
      rep.base_ok = true;
    }
  } else {  // kEqualG
    if (spec.family == KernelFamily::kPurePower) {
      rep.base_ok = spec.alpha < 1.0;
      if (!rep.base_ok)
        rep.messages.push_back(
            "pure power with stationary increments: alpha must lie in (0,1)");
    } else {
      rep.base_ok = true;
    }
  }

  rep.admissible = rep.near_field_ok && rep.far_field_ok && rep.base_ok;
  return rep;
}

MonotoneCubic::MonotoneCubic(std::vector<double> xs, std::vector<double> ys)
    : xs_(std::move(xs)), ys_(std::move(ys)) {
  const std::size_t n = xs_.size();
  if (n != ys_.size() || n < 2)
    throw config_error("MonotoneCubic: need >= 2 matched samples");
  for (std::size_t i = 1; i < n; ++i)
    if (!(xs_[i] > xs_[i - 1]))
      throw config_error("MonotoneCubic: abscissae must increase strictly");

  std::vector<double> d(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i)
    d[i] = (ys_[i + 1] - ys_[i]) / (xs_[i + 1] - xs_[i]);

  slopes_.assign(n, 0.0);
  slopes_[0] = d[0];
  slopes_[n - 1] = d[n - 2];
  for (std::size_t i = 1; i + 1 < n; ++i)
    slopes_[i] = (d[i - 1] * d[i] > 0.0) ? 0.5 * (d[i - 1] + d[i]) : 0.0;

  // Fritsch-Carlson limiter: keep (a, b) inside the circle of radius 3.
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (d[i] == 0.0) {
      slopes_[i] = slopes_[i + 1] = 0.0;
      continue;
    }
    const double a = slopes_[i] / d[i];
    const double b = slopes_[i + 1] / d[i];
    const double r = a * a + b * b;
    if (r > 9.0) {
      const double s = 3.0 / std::sqrt(r);
      slopes_[i] = s * a * d[i];
      slopes_[i + 1] = s * b * d[i];
    }
  }
}

double MonotoneCubic::operator()(double x) const {
  if (xs_.empty() || x < xs_.front() || x > xs_.back()) return 0.0;
  const auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
  const std::size_t i =
      std::min(xs_.size() - 2,
               static_cast<std::size_t>(std::max<std::ptrdiff_t>(
                   0, it - xs_.begin() - 1)));
  const double h = xs_[i + 1] - xs_[i];
  const double t = (x - xs_[i]) / h;
  const double h00 = (1 + 2 * t) * (1 - t) * (1 - t);
  const double h10 = t * (1 - t) * (1 - t);
  const double h01 = t * t * (3 - 2 * t);
  const double h11 = t * t * (t - 1);
  return h00 * ys_[i] + h10 * h * slopes_[i] + h01 * ys_[i + 1] +
         h11 * h * slopes_[i + 1];
}

}  // namespace pvar
