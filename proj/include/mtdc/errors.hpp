#pragma once
#include <stdexcept>
#include <string>

namespace mtdc {

// Malformed or unreadable configuration. CLI exit code 1.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Well-formed configuration that violates a model invariant. CLI exit code 1.
class ValidationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Solver failure, infeasible operating point, singular model. CLI exit code 2.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InfeasibleError : public NumericalError {
public:
  InfeasibleError(const std::string& what, double residual)
      : NumericalError(what), residual_(residual) {}
  double residual() const { return residual_; }

private:
  double residual_;
};

class DegenerateModeError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

} // namespace mtdc
