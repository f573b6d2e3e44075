#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace mtifp {

/// Invalid parameters, grids or configuration values.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Buffers or fields whose sizes or grids do not line up.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical procedure could not reach its requested accuracy.
class ConvergenceFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite values appeared during time stepping.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::int64_t step, double norm)
      : std::runtime_error("solution diverged at step " + std::to_string(step) +
                           " (norm " + std::to_string(norm) + ")"),
        step_(step),
        norm_(norm) {}

  std::int64_t step() const { return step_; }
  double norm() const { return norm_; }

 private:
  std::int64_t step_;
  double norm_;
};

/// Reference-store I/O or integrity problems.
class StoreError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mtifp
