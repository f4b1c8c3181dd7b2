#pragma once

#include <stdexcept>
#include <string>

namespace snakecpg {

/// Coarse failure categories; the CLI maps each to its own exit code.
enum class ErrorCategory {
  domain,       // parameter outside its mathematical domain
  numeric,      // blow-up, non-finite values, missing oscillation
  config,       // malformed or inconsistent configuration
  persistence,  // checkpoint / artifact I/O
  contract,     // caller violated a documented precondition
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

class ParameterDomainError : public Error {
 public:
  explicit ParameterDomainError(const std::string& what)
      : Error(ErrorCategory::domain, what) {}
};

class NumericalBlowupError : public Error {
 public:
  explicit NumericalBlowupError(const std::string& what)
      : Error(ErrorCategory::numeric, what) {}
};

class NoOscillationError : public Error {
 public:
  explicit NoOscillationError(const std::string& what)
      : Error(ErrorCategory::numeric, what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what)
      : Error(ErrorCategory::config, what) {}
};

class PersistenceError : public Error {
 public:
  explicit PersistenceError(const std::string& what)
      : Error(ErrorCategory::persistence, what) {}
};

class ContractViolation : public Error {
 public:
  explicit ContractViolation(const std::string& what)
      : Error(ErrorCategory::contract, what) {}
};

}  // namespace snakecpg
