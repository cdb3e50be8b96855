#pragma once

#include <stdexcept>
#include <string>

namespace llpb {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid input: bad parameters, mismatched shapes, malformed config.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A configuration key is missing or malformed. `key()` names the offender.
class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& what)
      : Error("config key '" + key + "': " + what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

/// A numerical procedure failed (non-convergence, integrator breakdown).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Evaluation requested within the guard distance of a Green's-function pole.
class PoleProximityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace llpb
