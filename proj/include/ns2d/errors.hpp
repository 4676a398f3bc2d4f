#ifndef NS2D_ERRORS_HPP
#define NS2D_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace ns2d {

/// Invalid parameter or configuration value (maps to CLI exit code 1).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Mismatched field shapes.
struct DimensionError : std::runtime_error {
  explicit DimensionError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Violated operation precondition (e.g. non-divergence-free input).
struct PreconditionError : std::runtime_error {
  explicit PreconditionError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Solver failure: non-convergence, NaN, residual too large.
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Trajectory norm exceeded the blow-up guard.
struct DivergenceError : std::runtime_error {
  explicit DivergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed or truncated binary file.
struct FormatError : std::runtime_error {
  explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Well-formed file whose contents violate invariants or expectations.
struct IntegrityError : std::runtime_error {
  explicit IntegrityError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace ns2d

#endif
