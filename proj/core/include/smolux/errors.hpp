#ifndef SMOLUX_ERRORS_HPP_
#define SMOLUX_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace smolux {

// Bad input shapes, mismatched grids, malformed or inconsistent configuration.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite values, diverged paths, unstable integrations.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Picard iteration failed to contract within the allowed continuation depth.
class NonConvergenceError : public std::runtime_error {
 public:
  NonConvergenceError(const std::string& msg, double last_rho)
      : std::runtime_error(msg), last_contraction(last_rho) {}
  double last_contraction;
};

}  // namespace smolux

#endif  // SMOLUX_ERRORS_HPP_
