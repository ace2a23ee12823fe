#include "pvar/stable_sampling.hpp"

#include <cmath>

#include "pvar/errors.hpp"

namespace pvar {
namespace {
constexpr double kPi = 3.14159265358979323846;
}

double sample_sas(double beta, double sigma, CounterRng& rng) {
  if (!(beta > 0.0) || beta > 2.0)
    throw domain_error("sample_sas: beta must lie in (0,2]");
  if (!(sigma >= 0.0)) throw domain_error("sample_sas: sigma must be >= 0");

  const double theta = kPi * (rng.uniform01() - 0.5);  // uniform (-pi/2, pi/2)
  const double w = rng.exponential();

  if (beta == 2.0) {
    // The general formula degenerates smoothly: 2 sin(theta) sqrt(w) is
    // N(0, 2), matching exp(-sigma^2 u^2).
    return sigma * 2.0 * std::sin(theta) * std::sqrt(w);
  }
  if (beta == 1.0) return sigma * std::tan(theta);

  const double c = std::cos(theta);
  const double a = std::sin(beta * theta) / std::pow(c, 1.0 / beta);
  const double b = std::pow(std::cos((1.0 - beta) * theta) / w,
                            (1.0 - beta) / beta);
  return sigma * a * b;
}

double sample_skewed_stable(double rho, double eta, CounterRng& rng) {
  if (!(rho > 1.0) || !(rho < 2.0))
    throw domain_error("sample_skewed_stable: rho must lie in (1,2)");
  if (!(eta >= 0.0)) throw domain_error("sample_skewed_stable: eta must be >= 0");

  // Weron's form of the CMS transform for skewness +1 in the common
  // (1-parametrization) convention; for rho > 1 the drift correction
  // vanishes and the draw already has mean zero.
  const double t = std::tan(kPi * rho / 2.0);
  const double bfac = std::atan(t) / rho;  // principal branch
  const double s0 = std::pow(1.0 + t * t, 0.5 / rho);

  const double theta = kPi * (rng.uniform01() - 0.5);
  const double w = rng.exponential();

  const double c = std::cos(theta);
  const double x = s0 * std::sin(rho * (theta + bfac)) / std::pow(c, 1.0 / rho) *
                   std::pow(std::cos(theta - rho * (theta + bfac)) / w,
                            (1.0 - rho) / rho);
  return eta * x;
}

std::vector<double> sample_sas_vec(double beta, double sigma, std::size_t n,
                                   CounterRng& rng) {
  std::vector<double> out(n);
  for (auto& v : out) v = sample_sas(beta, sigma, rng);
  return out;
}

}  // namespace pvar
