#pragma once

#include <stdexcept>
#include <string>

namespace relsim {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid space, radii, model or experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Separation constraints could not be met (no feasible point, or the
/// perturbation retry cap was hit).
class ConstraintError : public Error {
 public:
  using Error::Error;
};

/// The reliability oracle crashed or answered with something other than a bit.
/// Never interpreted as F = 0.
class OracleError : public Error {
 public:
  using Error::Error;
};

/// Out-of-process oracle spoke the line protocol incorrectly.
class ProtocolError : public OracleError {
 public:
  using OracleError::OracleError;
};

/// A user-supplied density for X_1 returned a negative or non-finite value,
/// or vanished where it must be positive.
class DensityError : public Error {
 public:
  using Error::Error;
};

/// No conditioning seeds could be found for a level within the sample budget.
class LevelUnreachable : public Error {
 public:
  LevelUnreachable(std::size_t level, const std::string& what)
      : Error("level " + std::to_string(level) + " unreachable at this budget: " + what),
        level_(level) {}
  std::size_t level() const noexcept { return level_; }

 private:
  std::size_t level_;
};

}  // namespace relsim
