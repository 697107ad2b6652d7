#pragma once

#include <stdexcept>
#include <string>

namespace igeo {

/* Base class for everything this library throws on purpose. */
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/* Bad input: dimension mismatch, out-of-range value, malformed data. */
class ValidationError : public Error {
public:
  using Error::Error;
};

/* Text could not be parsed; offset is the 0-based character position. */
class ParseError : public Error {
public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what), offset_(offset) {}
  std::size_t offset() const { return offset_; }

private:
  std::size_t offset_;
};

/* Expression evaluation failed: unbound variable or domain violation. */
class EvalError : public Error {
public:
  using Error::Error;
};

/* Iterative solver stopped without reaching its tolerance. */
class ConvergenceError : public Error {
public:
  ConvergenceError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

private:
  double residual_;
};

/* A matrix that must be invertible (or positive definite) is not. */
class SingularError : public Error {
public:
  using Error::Error;
};

/* A learning loop ran away (weight norm exceeded its cap). */
class DivergenceError : public Error {
public:
  using Error::Error;
};

/* Web traversal left the domain or failed to bracket a leaf crossing. */
class TraversalError : public Error {
public:
  using Error::Error;
};

}  // namespace igeo
