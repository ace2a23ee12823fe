#include "pvar/constants.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "pvar/errors.hpp"
#include "pvar/kernel.hpp"

namespace pvar {
namespace {

constexpr double kPi = 3.14159265358979323846;

void require_p01(double p) {
  if (!(p > 0.0) || !(p < 1.0))
    throw domain_error("a_p: exponent p must lie in (0,1)");
}

// Oscillatory tail int_T^inf cos(u) u^(-s) du by repeated integration by
// parts (4 boundary terms); remainder bound s(s+1)(s+2) T^(-s-3).
double cos_tail(double T, double s, double* err_bound) {
  const double sT = std::sin(T), cT = std::cos(T);
  double t1 = -sT * std::pow(T, -s);
  double t2 = s * cT * std::pow(T, -s - 1.0);
  double t3 = s * (s + 1.0) * sT * std::pow(T, -s - 2.0);
  double t4 = -s * (s + 1.0) * (s + 2.0) * cT * std::pow(T, -s - 3.0);
  *err_bound = s * (s + 1.0) * (s + 2.0) * std::pow(T, -s - 3.0);
  return t1 + t2 + t3 + t4;
}

// a_p on the extended range p in (0,2) (continuous through p = 1, where the
// value is pi).  The public a_p restricts to (0,1); the absolute-moment
// integral needs exponents up to 2p < 2.
QuadResult a_p_extended(double p, double tol) {
  if (!(p > 0.0) || !(p < 2.0))
    throw domain_error("a_p_extended: p must lie in (0,2)");
  const double eps = 0.1, T = 3000.0;

  // [0, eps]: 1 - cos u = u^2/2 - u^4/24 + u^6/720 - u^8/40320 + ...
  double head = std::pow(eps, 2.0 - p) / (2.0 * (2.0 - p)) -
                std::pow(eps, 4.0 - p) / (24.0 * (4.0 - p)) +
                std::pow(eps, 6.0 - p) / (720.0 * (6.0 - p)) -
                std::pow(eps, 8.0 - p) / (40320.0 * (8.0 - p));
  const double head_err = std::pow(eps, 10.0 - p) / (3628800.0 * (10.0 - p));

  auto f = [p](double u) {
    return (1.0 - std::cos(u)) * std::pow(u, -1.0 - p);
  };
  QuadResult mid = integrate(f, eps, T, tol * 0.25, tol * 0.25, 1000000);

  // [T, inf): the 1-part integrates exactly; the cos-part via parts.
  double tail = std::pow(T, -p) / p;
  double tail_err = 0.0;
  tail -= cos_tail(T, 1.0 + p, &tail_err);

  QuadResult out;
  out.value = 2.0 * (head + mid.value + tail);
  out.error = 2.0 * (head_err + mid.error + tail_err);
  out.evals = mid.evals;
  return out;
}

std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

// Truncated power-series helpers in the variable 1/x (index = power of 1/x).
using Series = std::vector<double>;

Series series_mul(const Series& a, const Series& b, std::size_t q) {
  Series c(q, 0.0);
  for (std::size_t i = 0; i < q && i < a.size(); ++i)
    for (std::size_t j = 0; i + j < q && j < b.size(); ++j)
      c[i + j] += a[i] * b[j];
  return c;
}

// (1 + u)^beta for a series u with u[0] = 0, via the binomial expansion.
Series series_one_plus_pow(const Series& u, double beta, std::size_t q) {
  Series acc(q, 0.0);
  acc[0] = 1.0;
  Series upow(q, 0.0);
  upow[0] = 1.0;
  double bin = 1.0;
  for (std::size_t j = 1; j < q; ++j) {
    bin *= (beta - (j - 1)) / static_cast<double>(j);
    upow = series_mul(upow, u, q);
    bool all_zero = true;
    for (std::size_t m = 0; m < q; ++m) {
      acc[m] += bin * upow[m];
      if (upow[m] != 0.0) all_zero = false;
    }
    if (all_zero) break;
  }
  return acc;
}

}  // namespace

QuadResult a_p(double p, double tol) {
  require_p01(p);
  return a_p_extended(p, tol);
}

QuadResult abs_power_via_integral(double x, double p, double tol) {
  require_p01(p);
  x = std::abs(x);
  if (x == 0.0) return QuadResult{0.0, 0.0, 0};

  const double eps = 0.1 / x, T = 3000.0;
  // Head series for 1 - cos(ux) on [0, eps].
  const double x2 = x * x, x4 = x2 * x2, x6 = x4 * x2, x8 = x4 * x4;
  double head = x2 * std::pow(eps, 2.0 - p) / (2.0 * (2.0 - p)) -
                x4 * std::pow(eps, 4.0 - p) / (24.0 * (4.0 - p)) +
                x6 * std::pow(eps, 6.0 - p) / (720.0 * (6.0 - p)) -
                x8 * std::pow(eps, 8.0 - p) / (40320.0 * (8.0 - p));
  const double head_err =
      x8 * x2 * std::pow(eps, 10.0 - p) / (3628800.0 * (10.0 - p));

  auto f = [x, p](double u) {
    return (1.0 - std::cos(u * x)) * std::pow(u, -1.0 - p);
  };
  QuadResult mid = integrate(f, eps, T, tol * 0.2, tol * 0.2, 2000000);

  // Tail: int_T^inf u^(-1-p) du - x^p int_{Tx}^inf cos(v) v^(-1-p) dv.
  double tail = std::pow(T, -p) / p;
  double tail_err = 0.0;
  tail -= std::pow(x, p) * cos_tail(T * x, 1.0 + p, &tail_err);
  tail_err *= std::pow(x, p);

  QuadResult ap = a_p(p, tol * 0.1);
  QuadResult out;
  const double numer = 2.0 * (head + mid.value + tail);
  const double numer_err = 2.0 * (head_err + mid.error + tail_err);
  out.value = numer / ap.value;
  out.error = numer_err / ap.value +
              std::abs(out.value) * ap.error / ap.value;
  out.evals = mid.evals + ap.evals;
  return out;
}

QuadResult hk_beta_norm(double alpha, double beta, int k, double tol) {
  if (!(beta > 0.0) || beta > 2.0)
    throw domain_error("hk_beta_norm: beta must lie in (0,2]");
  if (!((k - alpha) * beta > 1.0))
    throw domain_error(
        "hk_beta_norm: integrability (k - alpha) * beta > 1 violated; "
        "|h_k|^beta is not integrable at infinity");
  HkEvaluator hk(alpha, k);
  auto f = [&hk, beta](double x) { return std::pow(std::abs(hk(x)), beta); };

  QuadResult acc;
  // Unit panels across the kink region, then a smooth stretch to X.
  const double X = 32.0;
  for (int j = 0; j < k + 2; ++j)
    acc += integrate(f, j, j + 1, tol * 0.05, tol * 0.05);
  acc += integrate(f, k + 2, X, tol * 0.1, tol * 0.1);

  // Far tail by the asymptotic expansion |h_k|^beta =
  // |c0|^beta x^{(alpha-k) beta} (1 + u(x))^beta, u a series in 1/x.
  const double c0 = h_k_decay_coefficient(alpha, k);
  if (c0 != 0.0) {
    const std::size_t Q = 40;
    Series coef = h_k_series_coefficients(alpha, k);
    Series u(Q, 0.0);
    for (std::size_t m = 1; m < Q && m < coef.size(); ++m)
      u[m] = coef[m] / c0;
    Series w = series_one_plus_pow(u, beta, Q);
    const double s = (k - alpha) * beta;  // decay exponent, > 1
    double tail = 0.0, last = 0.0;
    for (std::size_t q = 0; q < Q; ++q) {
      last = w[q] * std::pow(X, 1.0 - s - q) / (s + q - 1.0);
      tail += last;
    }
    const double rem = 2.0 * std::abs(last) / (1.0 - 0.5);  // ratio <= 1/2
    acc.value += std::pow(std::abs(c0), beta) * tail;
    acc.error += std::pow(std::abs(c0), beta) * rem;
  }
  return acc;
}

QuadResult sas_abs_moment(double p, double beta, double tol) {
  if (!(beta > 0.0) || beta > 2.0)
    throw domain_error("sas_abs_moment: beta must lie in (0,2]");
  if (!(p > 0.0) || !(p < beta) || !(p < 2.0))
    throw domain_error(
        "sas_abs_moment: moment condition 0 < p < min(beta, 2) violated");

  const double eps = 0.1;
  const double U = std::pow(45.0, 1.0 / beta);

  // [0, eps]: expand 1 - exp(-u^beta).
  double head = 0.0, term = 0.0, fact = 1.0;
  for (int j = 1; j <= 60; ++j) {
    fact *= j;
    const double sgn = (j % 2 == 1) ? 1.0 : -1.0;
    term = sgn * std::pow(eps, j * beta - p) / (fact * (j * beta - p));
    head += term;
    if (std::abs(term) < 1e-17 * std::abs(head)) break;
  }

  auto f = [p, beta](double u) {
    return -std::expm1(-std::pow(u, beta)) * std::pow(u, -1.0 - p);
  };
  QuadResult mid = integrate(f, eps, U, tol * 0.25, tol * 0.25, 500000);

  const double tail = std::pow(U, -p) / p;
  const double tail_err = std::exp(-45.0) * tail;

  QuadResult ap = a_p_extended(p, tol * 0.1);
  QuadResult out;
  const double numer = 2.0 * (head + mid.value + tail);
  out.value = numer / ap.value;
  out.error = (2.0 * (mid.error + tail_err) + std::abs(term)) / ap.value +
              std::abs(out.value) * ap.error / ap.value;
  out.evals = mid.evals + ap.evals;
  return out;
}

QuadResult m_p(double alpha, double beta, double p, int k, double c0,
               double sigma, double tol) {
  if (!(p < beta))
    throw domain_error("m_p: ergodic moment condition p < beta violated");
  QuadResult n = hk_beta_norm(alpha, beta, k, tol * 0.1);
  QuadResult e = sas_abs_moment(p, beta, tol * 0.1);
  QuadResult out;
  out.value = std::pow(std::abs(c0) * sigma, p) *
              std::pow(n.value, p / beta) * e.value;
  out.error = std::abs(out.value) *
              ((p / beta) * n.error / n.value + e.error / e.value);
  out.evals = n.evals + e.evals;
  return out;
}

double tau_constant(double rho) {
  if (!(rho > 1.0) || !(rho < 2.0))
    throw domain_error("tau_constant: rho must lie in (1,2)");
  return (rho - 1.0) /
         (std::tgamma(2.0 - rho) * std::abs(std::cos(kPi * rho / 2.0)));
}

QuadResult phi_fluctuation(double x, double rho0, double beta, double p,
                           double tol) {
  if (!(rho0 > 0.0)) throw domain_error("phi_fluctuation: rho0 must be > 0");
  if (!(p > 0.0) || !(p < 2.0))
    throw domain_error("phi_fluctuation: p must lie in (0,2)");
  if (!(beta > 0.0) || beta > 2.0)
    throw domain_error("phi_fluctuation: beta must lie in (0,2]");
  x = std::abs(x);
  if (x == 0.0) return QuadResult{0.0, 0.0, 0};

  QuadResult ap = a_p_extended(p, std::min(tol * 0.1, 1e-10));

  if (x > 25.0) {
    // Asymptotic regime: Phi(x) = x^p - E|W|^p + r(x), |r| estimated from
    // the stable-tail correction at the matching point and the power decay
    // carried over from there.
    QuadResult mom = sas_abs_moment(p, beta, std::min(tol * 0.1, 1e-10));
    QuadResult at25 = phi_fluctuation(25.0, rho0, beta, p, tol);
    const double ew = std::pow(rho0, p) * mom.value;
    const double r25 = at25.value - (std::pow(25.0, p) - ew);
    QuadResult out;
    out.value = std::pow(x, p) - ew;
    out.error = std::abs(r25) * std::pow(x / 25.0, p - beta) + at25.error +
                std::pow(rho0, p) * mom.error;
    out.evals = mom.evals + at25.evals;
    return out;
  }

  // Quadrature: Phi(x) = (2 / a_p) int_0^inf (1 - cos(u x))
  //                      exp(-(rho0 u)^beta) u^(-1-p) du.
  const double U = std::pow(45.0, 1.0 / beta) / rho0;
  auto f = [x, rho0, beta, p](double u) {
    return (1.0 - std::cos(u * x)) * std::exp(-std::pow(rho0 * u, beta)) *
           std::pow(u, -1.0 - p);
  };
  // Integrand vanishes like u^(1-p) at 0: integrable without special care.
  QuadResult main = integrate(f, 0.0, U, tol * 0.2 * std::pow(x, p),
                              tol * 0.2, 400000);
  QuadResult out;
  out.value = 2.0 * main.value / ap.value;
  out.error = 2.0 * main.error / ap.value +
              std::abs(out.value) * ap.error / ap.value +
              2.0 * std::exp(-45.0);
  out.evals = main.evals + ap.evals;
  return out;
}

QuadResult kappa_constant(double alpha, double beta, double p, double tol) {
  if (!(alpha > 0.0) || !(alpha < 0.5))
    throw domain_error(
        "kappa_constant: requires 0 < alpha < 1/2 (second-order first-"
        "difference regime)");
  if (!(beta > 1.0) || !(beta < 2.0))
    throw domain_error("kappa_constant: beta must lie in (1,2)");
  if (!((1.0 - alpha) * beta > 1.0))
    throw domain_error("kappa_constant: requires alpha < 1 - 1/beta");
  const double q = 1.0 / (1.0 - alpha);  // outer tail exponent, in (1,2)
  if (!(p < q))
    throw domain_error("kappa_constant: requires p < 1/(1-alpha)");

  QuadResult norm = hk_beta_norm(alpha, beta, 1, std::min(tol * 0.01, 1e-11));
  const double rho0 = std::pow(norm.value, 1.0 / beta);
  QuadResult mom = sas_abs_moment(p, beta, std::min(tol * 0.01, 1e-10));
  const double ew = std::pow(rho0, p) * mom.value;

  const double phi_tol = std::max(tol * 0.05, 1e-9);
  auto phi = [&](double y) {
    return phi_fluctuation(y, rho0, beta, p, phi_tol);
  };

  QuadResult acc;
  // Inner end [0, y0] in geometric panels; Phi(y) = O(y^2) keeps every
  // panel integrable, and the leftover below the last panel is bounded by
  // geometric extrapolation of the panel values.
  const double y0 = 0.25;
  {
    double hi = y0;
    double panel_last = 0.0;
    double sum = 0.0, esum = 0.0;
    std::size_t evals = 0;
    for (int j = 0; j < 60; ++j) {
      const double lo = hi * 0.5;
      auto f = [&](double y) {
        QuadResult ph = phi(y);
        return ph.value * std::pow(y, -1.0 - q);
      };
      QuadResult panel = integrate(f, lo, hi, tol * 0.02, tol * 0.1, 20000);
      sum += panel.value;
      esum += panel.error;
      evals += panel.evals;
      panel_last = std::abs(panel.value);
      hi = lo;
      // Panels shrink like (2^{-(2-q)})^j: stop once negligible.
      if (panel_last < tol * 0.01 * std::max(1.0, std::abs(sum)) && j >= 6)
        break;
    }
    const double ratio = std::pow(2.0, -(2.0 - q));
    acc.value += sum;
    acc.error += esum + panel_last * ratio / (1.0 - ratio);
    acc.evals += evals;
  }
  // Middle [y0, Y].
  const double Y = 25.0;
  {
    auto f = [&](double y) {
      QuadResult ph = phi(y);
      return ph.value * std::pow(y, -1.0 - q);
    };
    QuadResult midq = integrate(f, y0, Y, tol * 0.05, tol * 0.05, 400000);
    acc += midq;
  }
  // Tail [Y, inf): Phi(y) = y^p - E|W|^p + r(y).
  {
    const double t1 = std::pow(Y, p - q) / (q - p);
    const double t2 = ew * std::pow(Y, -q) / q;
    QuadResult atY = phi_fluctuation(Y, rho0, beta, p, phi_tol);
    const double rY = atY.value - (std::pow(Y, p) - ew);
    // |r(y)| decays at least like the stable tail correction y^(p-beta).
    const double rterm =
        std::abs(rY) * std::pow(Y, -q) / q + atY.error * std::pow(Y, -q) / q;
    acc.value += t1 - t2;
    acc.error += rterm + mom.error * std::pow(rho0, p) * std::pow(Y, -q) / q;
    acc.evals += atY.evals;
  }

  const double pref = std::pow(alpha, q) / (1.0 - alpha);
  QuadResult out;
  out.value = pref * acc.value;
  out.error = pref * acc.error +
              std::abs(out.value) * (p / beta) * norm.error / norm.value;
  out.evals = acc.evals + norm.evals + mom.evals;
  return out;
}

QuadResult sigma_tilde(double alpha, double beta, double p, double c0,
                       double sigma, double tol) {
  const double rho = (1.0 - alpha) * beta;
  if (!(rho > 1.0) || !(rho < 2.0))
    throw domain_error(
        "sigma_tilde: requires rho = (1 - alpha) * beta in (1,2)");
  if (!(p > 0.0) || !(p < beta / 2.0))
    throw domain_error("sigma_tilde: requires 0 < p < beta/2");
  QuadResult kap = kappa_constant(alpha, beta, p, tol);
  const double ratio = tau_constant(beta) / tau_constant(rho);
  QuadResult out;
  out.value = std::pow(std::abs(c0) * sigma, p) * std::pow(ratio, 1.0 / rho) *
              kap.value;
  out.error = std::abs(out.value) * kap.error / std::max(kap.value, 1e-300);
  out.evals = kap.evals;
  return out;
}

namespace {

// Pointwise |A - B|^beta - |A|^beta - |B|^beta and the + variant, computed
// cancellation-free when one term dominates.
double delta_combination(double A, double B, double beta) {
  // returns |A + B|^beta - |A|^beta - |B|^beta  (call with -B for the minus
  // combination)
  if (A == 0.0 || B == 0.0) return 0.0;
  const double aa = std::abs(A), ab = std::abs(B);
  const double big = std::max(aa, ab), small = std::min(aa, ab);
  const double z = (std::signbit(A) == std::signbit(B) ? 1.0 : -1.0) * small /
                   big;
  if (std::abs(z) < 0.5) {
    // |1+z|^beta - 1 via expm1/log1p, exact to machine precision.
    const double bracket = std::expm1(beta * std::log1p(z));
    return std::pow(big, beta) * bracket - std::pow(small, beta);
  }
  return std::pow(std::abs(A + B), beta) - std::pow(aa, beta) -
         std::pow(ab, beta);
}

struct ThetaIntegrand {
  const HkEvaluator* hk;
  double beta, p, i, N;
  double two_p_over_beta;

  // D_pm(r) = int_0^infty delta_pm(x) dx for both sign combinations.
  void d_integrals(double r, double xtol, double& dplus, double& dminus,
                   std::size_t& evals) const {
    auto make = [&](double sign) {
      return [this, r, sign](double x) {
        const double A = (*hk)(x);
        const double B = sign * r * (*hk)(x + i);
        return delta_combination(A, B, beta);
      };
    };
    auto fplus = make(1.0);
    auto fminus = make(-1.0);

    const int kk = hk->k();
    const double xknee = i + kk + 2.0;
    const double X = std::max(32.0, xknee + 8.0);
    QuadResult qp, qm;
    // Unit panels across the kinks of both factors, then the smooth rest.
    double a = 0.0;
    while (a < xknee) {
      const double b = std::min(a + 1.0, xknee);
      qp += integrate(fplus, a, b, xtol, 1e-10, 60000);
      qm += integrate(fminus, a, b, xtol, 1e-10, 60000);
      a = b;
    }
    qp += integrate(fplus, xknee, X, xtol, 1e-10, 60000);
    qm += integrate(fminus, xknee, X, xtol, 1e-10, 60000);
    qp += integrate_tail(fplus, X, std::max(xtol, 1e-14), 1e-8, 120000);
    qm += integrate_tail(fminus, X, std::max(xtol, 1e-14), 1e-8, 120000);
    dplus = qp.value;
    dminus = qm.value;
    evals += qp.evals + qm.evals;
  }

  // G_plus(r) + G_minus(r), both computed through expm1/log1p so that the
  // difference against phi0^{2p/beta} never cancels destructively.
  double g_sum(double r, double xtol, std::size_t& evals) const {
    double dplus, dminus;
    d_integrals(r, xtol, dplus, dminus, evals);
    const double phi0 = (1.0 + std::pow(r, beta)) * N;
    const double f0 = std::pow(phi0, two_p_over_beta);
    const double gp = f0 * std::expm1(two_p_over_beta * std::log1p(dplus / phi0));
    const double gm =
        f0 * std::expm1(two_p_over_beta * std::log1p(dminus / phi0));
    return gp + gm;
  }
};

}  // namespace

QuadResult theta_i(int i, double alpha, double beta, int k, double p,
                   double tol) {
  if (i < 0) throw domain_error("theta_i: lag must be >= 0");
  if (!(beta > 0.0) || beta > 2.0)
    throw domain_error("theta_i: beta must lie in (0,2]");
  if (!(p > 0.0) || !(p < beta / 2.0))
    throw domain_error(
        "theta_i: second-order moment condition p < beta/2 violated");
  if (!((k - alpha) * beta > 1.0))
    throw domain_error("theta_i: requires (k - alpha) * beta > 1");

  HkEvaluator hk(alpha, k);
  QuadResult norm = hk_beta_norm(alpha, beta, k, std::min(1e-11, tol * 1e-3));

  if (i == 0) {
    // Lag zero is the plain variance of |V|^p, where V is symmetric stable
    // with scale N^{1/beta}; the general integral degenerates at r = 1, so
    // use the moment identity instead.
    QuadResult m2p = sas_abs_moment(2.0 * p, beta, std::min(1e-11, tol * 1e-3));
    QuadResult m1p = sas_abs_moment(p, beta, std::min(1e-11, tol * 1e-3));
    const double s2 = std::pow(norm.value, 2.0 * p / beta);
    QuadResult out;
    out.value = s2 * (m2p.value - m1p.value * m1p.value);
    out.error = s2 * (m2p.error + 2.0 * std::abs(m1p.value) * m1p.error) +
                std::abs(out.value) * (2.0 * p / beta) * norm.error /
                    norm.value;
    out.evals = m2p.evals + m1p.evals + norm.evals;
    return out;
  }

  ThetaIntegrand ti;
  ti.hk = &hk;
  ti.beta = beta;
  ti.p = p;
  ti.i = static_cast<double>(i);
  ti.N = norm.value;
  ti.two_p_over_beta = 2.0 * p / beta;

  QuadResult ap = a_p_extended(p, std::min(1e-11, tol * 1e-3));
  const double c_theta =
      2.0 * std::tgamma(-2.0 * p / beta) /
      (beta * ap.value * ap.value);

  // Integrate in t = log r; the integrand decays exponentially on both
  // sides (rate min(2,beta) - p at -inf by symmetry r -> 1/r at +inf).
  const double rate = std::min(2.0, beta) - p;
  const double T = std::ceil(34.0 / rate) + 4.0;
  std::size_t inner_evals = 0;
  const double scale = std::pow(2.0 * ti.N, ti.two_p_over_beta);
  const double xtol = scale * 1e-12;
  auto f = [&](double t) {
    const double r = std::exp(t);
    return std::exp(-p * t) * ti.g_sum(r, xtol, inner_evals);
  };
  QuadResult outer =
      integrate(f, -T, T, scale * tol * 0.25, tol * 0.25, 40000);

  QuadResult out;
  out.value = c_theta * outer.value;
  out.error = std::abs(c_theta) * (outer.error + scale * 1e-10) +
              std::abs(out.value) *
                  (2.0 * ap.error / ap.value +
                   ti.two_p_over_beta * norm.error / norm.value);
  out.evals = outer.evals + inner_evals + ap.evals + norm.evals;
  return out;
}

QuadResult eta_sq(double alpha, double beta, int k, double p, double c0,
                  double sigma, double tol, ThetaSeries* series_out) {
  ThetaSeries series;
  QuadResult acc;
  double total = 0.0;
  const int kMaxLag = 128;
  const double term_tol = tol;

  for (int i = 0; i <= kMaxLag; ++i) {
    QuadResult th = theta_i(i, alpha, beta, k, p,
                            std::max(term_tol * 0.1, 1e-9));
    series.values.push_back(th.value);
    acc.error += (i == 0 ? 1.0 : 2.0) * th.error;
    acc.evals += th.evals;
    total += (i == 0 ? 1.0 : 2.0) * th.value;

    if (i >= 6) {
      // Fit |theta| ~ K j^{-r} on the trailing half and bound the rest.
      const int lo = std::max(2, i / 2);
      double sx = 0, sy = 0, sxx = 0, sxy = 0;
      int cnt = 0;
      for (int j = lo; j <= i; ++j) {
        const double v = std::abs(series.values[j]);
        if (v <= 0.0) continue;
        const double lx = std::log(static_cast<double>(j));
        const double ly = std::log(v);
        sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
        ++cnt;
      }
      if (cnt >= 3) {
        const double denom = cnt * sxx - sx * sx;
        if (denom > 0) {
          const double slope = (cnt * sxy - sx * sy) / denom;
          const double r = -slope;
          const double logK = (sy - slope * sx) / cnt;
          if (r > 1.05) {
            const double K = std::exp(logK);
            // Euler-Maclaurin estimate of 2 * sum_{j > i} theta(j) under the
            // fitted power law, charged with half its own size: the local
            // exponent drifts slowly, so the fit is good to tens of percent
            // of the (already small) tail, not to machine precision.
            const double di = static_cast<double>(i);
            const double sign = series.values[i] < 0.0 ? -1.0 : 1.0;
            const double tail_est =
                sign * 2.0 * K *
                (std::pow(di, 1.0 - r) / (r - 1.0) + 0.5 * std::pow(di, -r));
            // The trailing-half exponent drifts slowly upward toward its
            // asymptote, so the fit overestimates the true tail; thirty
            // percent of the estimate is an honest one-sided uncertainty.
            const double rem = 0.3 * std::abs(tail_est);
            if (rem < tol * std::max(std::abs(total), series.values[0])) {
              series.tail_bound = rem;
              series.fitted_decay = r;
              acc.error += rem;
              acc.value = total + tail_est;
              const double scale2p = std::pow(std::abs(c0) * sigma, 2.0 * p);
              QuadResult out;
              out.value = scale2p * acc.value;
              out.error = scale2p * acc.error;
              out.evals = acc.evals;
              if (series_out) *series_out = series;
              return out;
            }
          } else if (i >= 48) {
            throw tolerance_error(
                "eta_sq: fitted covariance decay <= 1; series not summable "
                "at the requested tolerance");
          }
        }
      }
    }
  }
  throw tolerance_error(
      "eta_sq: covariance series did not reach the requested tolerance "
      "within 128 lags");
}

namespace {

nlohmann::json constants_to_json(const LimitConstants& c) {
  nlohmann::json j;
  j["regime"] = c.regime;
  j["alpha"] = c.alpha;
  j["beta"] = c.beta;
  j["p"] = c.p;
  j["k"] = c.k;
  j["c0"] = c.c0;
  j["sigma"] = c.sigma;
  j["tol"] = c.tol;
  j["a_p"] = c.a_p_value;
  j["hk_norm"] = c.hk_norm;
  j["sas_moment"] = c.sas_moment;
  j["m_p"] = c.m_p_value;
  j["tau_beta"] = c.tau_beta;
  j["tau_rho"] = c.tau_rho;
  j["rho"] = c.rho;
  j["kappa"] = c.kappa_value;
  j["sigma_tilde"] = c.sigma_tilde_value;
  j["eta_sq"] = c.eta_sq_value;
  j["theta_series"] = c.theta_series;
  j["theta_tail_bound"] = c.theta_tail_bound;
  j["error_bound"] = c.error_bound;
  return j;
}

LimitConstants constants_from_json(const nlohmann::json& j) {
  LimitConstants c;
  c.regime = j.at("regime").get<std::string>();
  c.alpha = j.at("alpha").get<double>();
  c.beta = j.at("beta").get<double>();
  c.p = j.at("p").get<double>();
  c.k = j.at("k").get<int>();
  c.c0 = j.at("c0").get<double>();
  c.sigma = j.at("sigma").get<double>();
  c.tol = j.at("tol").get<double>();
  c.a_p_value = j.at("a_p").get<double>();
  c.hk_norm = j.at("hk_norm").get<double>();
  c.sas_moment = j.at("sas_moment").get<double>();
  c.m_p_value = j.at("m_p").get<double>();
  c.tau_beta = j.at("tau_beta").get<double>();
  c.tau_rho = j.at("tau_rho").get<double>();
  c.rho = j.at("rho").get<double>();
  c.kappa_value = j.at("kappa").get<double>();
  c.sigma_tilde_value = j.at("sigma_tilde").get<double>();
  c.eta_sq_value = j.at("eta_sq").get<double>();
  c.theta_series = j.at("theta_series").get<std::vector<double>>();
  c.theta_tail_bound = j.at("theta_tail_bound").get<double>();
  c.error_bound = j.at("error_bound").get<double>();
  return c;
}

}  // namespace

std::string LimitConstants::to_json_string() const {
  return constants_to_json(*this).dump(2);
}

LimitConstants LimitConstants::from_json_string(const std::string& s) {
  try {
    return constants_from_json(nlohmann::json::parse(s));
  } catch (const nlohmann::json::exception& e) {
    throw config_error(std::string("constants JSON parse failure: ") +
                       e.what());
  }
}

LimitConstants compute_limit_constants(const std::string& regime, double alpha,
                                       double beta, double p, int k, double c0,
                                       double sigma, double tol) {
  LimitConstants c;
  c.regime = regime;
  c.alpha = alpha;
  c.beta = beta;
  c.p = p;
  c.k = k;
  c.c0 = c0;
  c.sigma = sigma;
  c.tol = tol;

  if (regime == "jump" || regime == "smooth") {
    // Limits are path-dependent random objects; only the generic normalizer
    // is meaningful, and only for p < 1.
    if (p > 0.0 && p < 1.0) {
      QuadResult ap = a_p(p, tol);
      c.a_p_value = ap.value;
      c.error_bound += ap.error;
    }
    return c;
  }

  if (regime == "ergodic" || regime == "gaussian2" || regime == "stable2") {
    QuadResult n = hk_beta_norm(alpha, beta, k, std::min(tol * 0.1, 1e-11));
    QuadResult e = sas_abs_moment(p, beta, std::min(tol * 0.1, 1e-10));
    QuadResult m = m_p(alpha, beta, p, k, c0, sigma, tol);
    c.hk_norm = n.value;
    c.sas_moment = e.value;
    c.m_p_value = m.value;
    c.error_bound += m.error;
    if (p > 0.0 && p < 1.0) {
      QuadResult ap = a_p(p, tol);
      c.a_p_value = ap.value;
      c.error_bound += ap.error;
    }
    if (regime == "gaussian2") {
      ThetaSeries ts;
      QuadResult ee = eta_sq(alpha, beta, k, p, c0, sigma, tol, &ts);
      c.eta_sq_value = ee.value;
      c.theta_series = ts.values;
      c.theta_tail_bound = ts.tail_bound;
      c.error_bound += ee.error;
    } else if (regime == "stable2") {
      if (k != 1)
        throw domain_error(
            "stable2 constants: the totally skewed limit needs k = 1");
      c.rho = (1.0 - alpha) * beta;
      c.tau_beta = tau_constant(beta);
      c.tau_rho = tau_constant(c.rho);
      QuadResult kap = kappa_constant(alpha, beta, p, tol);
      c.kappa_value = kap.value;
      QuadResult st = sigma_tilde(alpha, beta, p, c0, sigma, tol);
      c.sigma_tilde_value = st.value;
      c.error_bound += st.error;
    }
    return c;
  }
  throw config_error("compute_limit_constants: unknown regime '" + regime +
                     "'");
}

std::string constants_cache_key(const std::string& regime, double alpha,
                                double beta, double p, int k, double c0,
                                double sigma, double tol) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s|%.17g|%.17g|%.17g|%d|%.17g|%.17g|%.17g",
                regime.c_str(), alpha, beta, p, k, c0, sigma, tol);
  return fnv1a_hex(buf);
}

LimitConstants load_or_compute_constants(const std::string& cache_dir,
                                         const std::string& regime,
                                         double alpha, double beta, double p,
                                         int k, double c0, double sigma,
                                         double tol) {
  if (cache_dir.empty())
    return compute_limit_constants(regime, alpha, beta, p, k, c0, sigma, tol);

  namespace fs = std::filesystem;
  const std::string key =
      constants_cache_key(regime, alpha, beta, p, k, c0, sigma, tol);
  const fs::path file = fs::path(cache_dir) / ("constants_" + key + ".json");

  if (fs::exists(file)) {
    std::ifstream in(file);
    std::stringstream ss;
    ss << in.rdbuf();
    try {
      LimitConstants c = LimitConstants::from_json_string(ss.str());
      if (c.regime == regime && c.alpha == alpha && c.beta == beta &&
          c.p == p && c.k == k && c.c0 == c0 && c.sigma == sigma &&
          c.tol == tol)
        return c;
    } catch (const config_error&) {
      // Fall through to recompute; stale or foreign file.
    }
  }

  LimitConstants c =
      compute_limit_constants(regime, alpha, beta, p, k, c0, sigma, tol);
  fs::create_directories(fs::path(cache_dir));
  std::ofstream out(file);
  out << c.to_json_string() << "\n";
  return c;
}

}  // namespace pvar
