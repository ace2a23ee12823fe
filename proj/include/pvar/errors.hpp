#ifndef PVAR_ERRORS_HPP_
#define PVAR_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace pvar {

// Bad user-supplied configuration (unknown keys, malformed files, invalid
// parameter combinations that are rejectable before any numerics run).
struct config_error : std::runtime_error {
  explicit config_error(const std::string& m) : std::runtime_error(m) {}
};

// A mathematical precondition is violated (regime inequality fails, kernel
// not admissible, degenerate input).  The message names the inequality.
struct domain_error : std::runtime_error {
  explicit domain_error(const std::string& m) : std::runtime_error(m) {}
};

// A numeric routine cannot reach the requested tolerance (divergent tail,
// truncation bound too large, quadrature failure).  Carries the refusal
// diagnostics in the message.
struct tolerance_error : std::runtime_error {
  explicit tolerance_error(const std::string& m) : std::runtime_error(m) {}
};

// A verification gate evaluated to fail; used by the CLI to map onto its
// dedicated exit code.
struct verification_error : std::runtime_error {
  explicit verification_error(const std::string& m) : std::runtime_error(m) {}
};

}  // namespace pvar

#endif  // PVAR_ERRORS_HPP_
