#ifndef LIFE_COMMON_HPP
#define LIFE_COMMON_HPP

#include <stdexcept>
#include <string>

#define LIFE_VERSION "0.1.0"

namespace life {

/// Thrown when an input violates an operation's preconditions.
class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

/// Thrown when a computation fails numerically (non-finite loss, divergence).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace life

#endif  // LIFE_COMMON_HPP
