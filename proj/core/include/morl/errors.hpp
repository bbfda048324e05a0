#pragma once

#include <stdexcept>
#include <string>

namespace morl {

/// A vector return that cannot be L1-normalized (all-zero or negative after shift).
class DegenerateReturnError : public std::invalid_argument {
  public:
    explicit DegenerateReturnError(const std::string& what) : std::invalid_argument(what) {}
};

/// Stepping a terminal environment state.
class IllegalTransitionError : public std::logic_error {
  public:
    explicit IllegalTransitionError(const std::string& what) : std::logic_error(what) {}
};

/// Operation not available for the given configuration (e.g. exact hypervolume above 3-D).
class UnsupportedError : public std::logic_error {
  public:
    explicit UnsupportedError(const std::string& what) : std::logic_error(what) {}
};

/// Malformed on-disk artifact. Carries the 1-based line number when known (0 otherwise).
class ParseError : public std::runtime_error {
  public:
    ParseError(const std::string& what, long line)
        : std::runtime_error(line > 0 ? what + " (line " + std::to_string(line) + ")" : what),
          line_(line) {}
    long line() const { return line_; }

  private:
    long line_;
};

/// Loaded artifact violates a dataset/checkpoint invariant.
class IntegrityError : public std::runtime_error {
  public:
    explicit IntegrityError(const std::string& what) : std::runtime_error(what) {}
};

/// Non-finite value encountered during numeric computation.
class NumericalError : public std::runtime_error {
  public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// NaN/Inf gradient rejected by the optimizer. Carries the parameter name.
class NonFiniteGradientError : public NumericalError {
  public:
    explicit NonFiniteGradientError(const std::string& param)
        : NumericalError("non-finite gradient in parameter '" + param + "'"), param_(param) {}
    const std::string& parameter() const { return param_; }

  private:
    std::string param_;
};

/// Invalid configuration (bad θ, unknown family, mismatched module wiring).
class ConfigError : public std::invalid_argument {
  public:
    explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

} // namespace morl
