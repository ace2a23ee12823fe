#ifndef PVAR_QUADRATURE_HPP_
#define PVAR_QUADRATURE_HPP_

#include <cstddef>
#include <functional>

namespace pvar {

struct QuadResult {
  double value = 0.0;
  double error = 0.0;        // estimated absolute error
  std::size_t evals = 0;     // integrand evaluations consumed

  QuadResult& operator+=(const QuadResult& o) {
    value += o.value;
    error += o.error;
    evals += o.evals;
    return *this;
  }
};

// Adaptive Gauss-Kronrod 7/15 on [a, b].  Stops when the summed interval
// error estimate drops below max(abs_tol, rel_tol * |value|); throws
// tolerance_error if max_evals is exhausted first.
QuadResult integrate(const std::function<double(double)>& f, double a,
                     double b, double abs_tol, double rel_tol,
                     std::size_t max_evals = 200000);

// Tail integral over [x0, infinity), computed through the substitution
// x = x0 / w, w in (0, 1].  Suitable for integrands with power-law decay
// faster than 1/x.
QuadResult integrate_tail(const std::function<double(double)>& f, double x0,
                          double abs_tol, double rel_tol,
                          std::size_t max_evals = 200000);

}  // namespace pvar

#endif  // PVAR_QUADRATURE_HPP_
