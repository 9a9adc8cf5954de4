#pragma once

#include <stdexcept>
#include <string>

namespace regmod {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller passed arguments that violate an operation's preconditions.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// A configuration record failed validation. `path()` names the offending field.
class ConfigError : public Error {
 public:
  ConfigError(std::string path, const std::string& message)
      : Error(path + ": " + message), path_(std::move(path)) {}

  [[nodiscard]] const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// The operation has no exact kernel for the requested family.
class CapabilityError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

/// Too few usable samples for an estimator.
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

}  // namespace regmod
