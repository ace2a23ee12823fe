#ifndef PVAR_STABLE_SAMPLING_HPP_
#define PVAR_STABLE_SAMPLING_HPP_

#include <vector>

#include "pvar/rng.hpp"

namespace pvar {

// Symmetric stable draw with characteristic function exp(-sigma^beta |u|^beta),
// beta in (0,2].  beta = 2 gives a centered Gaussian with variance 2 sigma^2,
// beta = 1 a Cauchy with scale sigma.  Chambers–Mallows–Stuck transform.
double sample_sas(double beta, double sigma, CounterRng& rng);

// Totally right-skewed stable draw, rho in (1,2), with characteristic function
//   E exp(i u S) = exp(-eta^rho |u|^rho (1 - i sign(u) tan(pi rho / 2))),
// so E S = 0 and P(S > x) ~ tau(rho) * eta^rho * x^(-rho) as x -> infinity.
double sample_skewed_stable(double rho, double eta, CounterRng& rng);

std::vector<double> sample_sas_vec(double beta, double sigma, std::size_t n,
                                   CounterRng& rng);

}  // namespace pvar

#endif  // PVAR_STABLE_SAMPLING_HPP_
