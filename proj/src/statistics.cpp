#include "pvar/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "pvar/errors.hpp"
#include "pvar/kernel.hpp"

namespace pvar {

std::string to_string(LimitRegime regime) {
  switch (regime) {
    case LimitRegime::kJump: return "jump";
    case LimitRegime::kErgodic: return "ergodic";
    case LimitRegime::kSmooth: return "smooth";
  }
  return "?";
}

LimitRegime regime_from_string(const std::string& s) {
  if (s == "jump") return LimitRegime::kJump;
  if (s == "ergodic") return LimitRegime::kErgodic;
  if (s == "smooth") return LimitRegime::kSmooth;
  throw config_error("unknown regime '" + s +
                     "' (expected jump, ergodic or smooth)");
}

std::vector<double> increments(const std::vector<double>& values, int k) {
  if (k < 1 || k > kMaxDifferenceOrder)
    throw domain_error("increments: difference order out of range");
  if (static_cast<int>(values.size()) < k + 1)
    throw domain_error("increments: need at least k + 1 samples");
  const int n = static_cast<int>(values.size()) - 1;
  std::vector<double> d(static_cast<std::size_t>(n - k + 1));
  for (int i = k; i <= n; ++i) {
    double acc = 0.0;
    for (int j = 0; j <= k; ++j) {
      const double sgn = (j % 2 == 0) ? 1.0 : -1.0;
      acc += sgn * binomial_exact(k, j) *
             values[static_cast<std::size_t>(i - j)];
    }
    d[static_cast<std::size_t>(i - k)] = acc;
  }
  return d;
}

double power_variation(const std::vector<double>& values, double p, int k) {
  if (!(p > 0.0)) throw domain_error("power_variation: p must be > 0");
  std::vector<double> d = increments(values, k);
  double acc = 0.0;
  for (double v : d) acc += std::pow(std::abs(v), p);  // 0^p == 0 for p > 0
  return acc;
}

double scale_exponent(LimitRegime regime, double alpha, double beta, double p,
                      int k) {
  switch (regime) {
    case LimitRegime::kJump: return alpha * p;
    case LimitRegime::kErgodic: return p * (alpha + 1.0 / beta) - 1.0;
    case LimitRegime::kSmooth: return p * k - 1.0;
  }
  return 0.0;
}

void check_regime(LimitRegime regime, double alpha, double beta, double p,
                  int k) {
  char msg[160];
  const bool stable_driver = beta > 0.0;
  switch (regime) {
    case LimitRegime::kJump:
      if (!(alpha < k - 1.0 / p)) {
        std::snprintf(msg, sizeof msg,
                      "jump regime needs alpha < k - 1/p "
                      "(alpha=%.4g, k=%d, p=%.4g)",
                      alpha, k, p);
        throw domain_error(msg);
      }
      if (stable_driver && !(p > beta)) {
        std::snprintf(msg, sizeof msg,
                      "jump regime with a stable driver needs p > beta "
                      "(p=%.4g, beta=%.4g)",
                      p, beta);
        throw domain_error(msg);
      }
      break;
    case LimitRegime::kErgodic:
      if (!stable_driver)
        throw domain_error(
            "ergodic regime needs a stable driver (beta > 0)");
      if (!(p < beta)) {
        std::snprintf(msg, sizeof msg,
                      "ergodic regime needs p < beta (p=%.4g, beta=%.4g)", p,
                      beta);
        throw domain_error(msg);
      }
      if (!(alpha < k - 1.0 / beta)) {
        std::snprintf(msg, sizeof msg,
                      "ergodic regime needs alpha < k - 1/beta "
                      "(alpha=%.4g, k=%d, beta=%.4g)",
                      alpha, k, beta);
        throw domain_error(msg);
      }
      break;
    case LimitRegime::kSmooth: {
      if (!(p >= 1.0)) {
        std::snprintf(msg, sizeof msg, "smooth regime needs p >= 1 (p=%.4g)",
                      p);
        throw domain_error(msg);
      }
      const double bp = std::max(beta, p);
      if (!(alpha > k - 1.0 / bp)) {
        std::snprintf(msg, sizeof msg,
                      "smooth regime needs alpha > k - 1/max(beta,p) "
                      "(alpha=%.4g, k=%d, beta=%.4g, p=%.4g)",
                      alpha, k, beta, p);
        throw domain_error(msg);
      }
      break;
    }
  }
}

PowerVariationResult scale_statistic(const std::vector<double>& values,
                                     double p, int k, LimitRegime regime,
                                     double alpha, double beta) {
  check_regime(regime, alpha, beta, p, k);
  PowerVariationResult r;
  r.n = static_cast<int>(values.size()) - 1;
  r.p = p;
  r.k = k;
  r.raw = power_variation(values, p, k);
  r.exponent = scale_exponent(regime, alpha, beta, p, k);
  r.scaled = std::pow(static_cast<double>(r.n), r.exponent) * r.raw;
  return r;
}

double second_order_rate_exponent(double alpha, double beta, int k) {
  char msg[160];
  if (k == 1) {
    const double rho = (1.0 - alpha) * beta;
    if (!(rho > 1.0 && rho < 2.0)) {
      std::snprintf(msg, sizeof msg,
                    "first-difference fluctuation limit needs "
                    "(1-alpha)*beta in (1,2), got %.4g",
                    rho);
      throw domain_error(msg);
    }
    return 1.0 - 1.0 / rho;
  }
  if (!(alpha < k - 2.0 / beta)) {
    std::snprintf(msg, sizeof msg,
                  "Gaussian fluctuation limit needs alpha < k - 2/beta "
                  "(alpha=%.4g, k=%d, beta=%.4g)",
                  alpha, k, beta);
    throw domain_error(msg);
  }
  return 0.5;
}

double second_order_statistic(const std::vector<double>& values, double p,
                              int k, double alpha, double beta,
                              double limit_value) {
  if (!(p < beta / 2.0)) {
    char msg[128];
    std::snprintf(msg, sizeof msg,
                  "fluctuation statistic needs p < beta/2 (p=%.4g, beta=%.4g)",
                  p, beta);
    throw domain_error(msg);
  }
  const double gamma = second_order_rate_exponent(alpha, beta, k);
  PowerVariationResult first =
      scale_statistic(values, p, k, LimitRegime::kErgodic, alpha, beta);
  return std::pow(static_cast<double>(first.n), gamma) *
         (first.scaled - limit_value);
}

RatioEstimate ratio_estimator(const std::vector<double>& values, double p) {
  if (!(p > 0.0)) throw domain_error("ratio_estimator: p must be > 0");
  const int n = static_cast<int>(values.size()) - 1;
  if (n < 4 || n % 2 != 0)
    throw domain_error(
        "ratio_estimator: need an even number >= 4 of increments for the "
        "dyadic coarsening");
  std::vector<double> coarse;
  coarse.reserve(static_cast<std::size_t>(n / 2) + 1);
  for (int i = 0; i <= n; i += 2)
    coarse.push_back(values[static_cast<std::size_t>(i)]);

  RatioEstimate est;
  est.v_fine = power_variation(values, p, 1);
  est.v_coarse = power_variation(coarse, p, 1);
  if (!(est.v_fine > 0.0) || !(est.v_coarse > 0.0) ||
      !std::isfinite(est.v_fine) || !std::isfinite(est.v_coarse))
    throw domain_error(
        "ratio_estimator: degenerate input (zero or non-finite power "
        "variation)");
  est.log2_ratio = std::log2(est.v_coarse / est.v_fine);
  est.H_hat = (est.log2_ratio + 1.0) / p;
  return est;
}

namespace {

struct OlsFit {
  double slope = 0.0, intercept = 0.0, r2 = 1.0;
};

OlsFit ols(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
    syy += y[i] * y[i];
  }
  OlsFit f;
  const double vx = sxx - sx * sx / n;
  const double vy = syy - sy * sy / n;
  const double cxy = sxy - sx * sy / n;
  f.slope = cxy / vx;
  f.intercept = (sy - f.slope * sx) / n;
  f.r2 = vy > 0.0 ? cxy * cxy / (vx * vy) : 1.0;
  return f;
}

}  // namespace

PowerLawFit log_power_regression(const std::vector<double>& values,
                                 const std::vector<double>& powers, int k,
                                 const std::vector<int>& n_grid) {
  if (n_grid.size() < 3)
    throw domain_error("log_power_regression: need at least 3 grid sizes");
  const int n_max = static_cast<int>(values.size()) - 1;
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    if (n_grid[i] <= k)
      throw domain_error("log_power_regression: grid sizes must exceed k");
    if (i > 0 && n_grid[i] <= n_grid[i - 1])
      throw domain_error(
          "log_power_regression: grid sizes must be strictly increasing");
    if (n_max % n_grid[i] != 0)
      throw domain_error(
          "log_power_regression: every grid size must divide the sample "
          "resolution");
  }
  if (powers.empty())
    throw domain_error("log_power_regression: need at least one power");

  PowerLawFit fit;
  // A scaling-law crossing can only be located with several powers on both
  // sides; extend thin caller lists with a standard ladder and flag it.
  std::set<double> pset(powers.begin(), powers.end());
  if (powers.size() < 4) {
    for (double q : {0.3, 0.6, 1.0, 1.6, 2.4, 3.2}) pset.insert(q);
    fit.augmented = true;
  }
  fit.powers.assign(pset.begin(), pset.end());

  std::vector<double> log_n;
  log_n.reserve(n_grid.size());
  for (int nj : n_grid) log_n.push_back(std::log(static_cast<double>(nj)));

  for (double p : fit.powers) {
    std::vector<double> log_v;
    log_v.reserve(n_grid.size());
    for (int nj : n_grid) {
      const int stride = n_max / nj;
      std::vector<double> sub;
      sub.reserve(static_cast<std::size_t>(nj) + 1);
      for (int i = 0; i <= nj; ++i)
        sub.push_back(values[static_cast<std::size_t>(i * stride)]);
      const double v = power_variation(sub, p, k);
      if (!(v > 0.0) || !std::isfinite(v))
        throw domain_error(
            "log_power_regression: degenerate power variation on the grid");
      log_v.push_back(std::log(v));
    }
    OlsFit f = ols(log_n, log_v);
    fit.slopes.push_back(f.slope);
    fit.r_squared.push_back(f.r2);
    if (f.r2 < 0.9) {
      fit.conclusive = false;
      fit.message = "per-power scaling fit has R^2 < 0.9; the sample does "
                    "not follow a power law over this grid";
    }
  }

  // Invert s(p) = max(1 - H p, -a p): choose the split minimizing the
  // combined squared residual of the two constrained branches.
  const std::size_t np = fit.powers.size();
  double best_sse = 1e300;
  int best_split = static_cast<int>(np);  // all lower branch
  double best_H = 0.0, best_a = 0.0;
  for (std::size_t split = 2; split <= np; ++split) {
    // Lower branch indices [0, split), upper [split, np).  split == np means
    // everything is on the lower branch; a single-point upper branch is not
    // an identifiable fit.
    if (split + 1 == np) continue;
    double num_H = 0, den_H = 0, num_a = 0, den_a = 0;
    for (std::size_t i = 0; i < split; ++i) {
      num_H += fit.powers[i] * (1.0 - fit.slopes[i]);
      den_H += fit.powers[i] * fit.powers[i];
    }
    for (std::size_t i = split; i < np; ++i) {
      num_a += fit.powers[i] * (-fit.slopes[i]);
      den_a += fit.powers[i] * fit.powers[i];
    }
    const double H = den_H > 0 ? num_H / den_H : 0.0;
    const double a = den_a > 0 ? num_a / den_a : 0.0;
    double sse = 0.0;
    for (std::size_t i = 0; i < split; ++i) {
      const double r = fit.slopes[i] - (1.0 - H * fit.powers[i]);
      sse += r * r;
    }
    for (std::size_t i = split; i < np; ++i) {
      const double r = fit.slopes[i] - (-a * fit.powers[i]);
      sse += r * r;
    }
    if (sse < best_sse) {
      best_sse = sse;
      best_split = static_cast<int>(split);
      best_H = H;
      best_a = a;
    }
  }
  fit.split_index = best_split;
  fit.H_hat = best_H;
  fit.alpha_hat = best_a;
  if (best_split >= static_cast<int>(np)) {
    fit.beta_hat = 0.0;  // no upper branch: crossing beyond the power range
    if (fit.message.empty())
      fit.message = "all powers lie on the lower scaling branch; the "
                    "crossing power is beyond the fitted range";
  } else if (best_H - best_a > 1e-6) {
    fit.beta_hat = 1.0 / (best_H - best_a);
  } else {
    fit.conclusive = false;
    fit.message = "branch coefficients do not separate; crossing power "
                  "undetermined";
  }
  return fit;
}

}  // namespace pvar
