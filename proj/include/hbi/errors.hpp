#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hbi {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidDistribution : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class AxisError : public Error {
 public:
  using Error::Error;
};

class GridCoverageError : public Error {
 public:
  using Error::Error;
};

class MissingSignal : public Error {
 public:
  using Error::Error;
};

class BatchTooSmall : public Error {
 public:
  using Error::Error;
};

class InvalidDistortion : public Error {
 public:
  using Error::Error;
};

class SingularSystem : public Error {
 public:
  using Error::Error;
};

class EmptyEval : public Error {
 public:
  using Error::Error;
};

class NotNonInvertible : public Error {
 public:
  using Error::Error;
};

class EmptyInstance : public Error {
 public:
  using Error::Error;
};

class DuplicateId : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// A required input path does not exist (a usage error, not a validation one).
class NotFound : public Error {
 public:
  using Error::Error;
};

/// Iterative solver ran out of iterations; carries the last bracket.
class NonConvergence : public Error {
 public:
  NonConvergence(const std::string& msg, double lo, double hi, long iterations)
      : Error(msg), bracket_lo(lo), bracket_hi(hi), iterations(iterations) {}

  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  long iterations = 0;
};

/// Training loss increased for too many consecutive epochs; carries the trace.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& msg, std::vector<double> loss_trace)
      : Error(msg), trace(std::move(loss_trace)) {}

  std::vector<double> trace;
};

/// Malformed record in an ingested score file; carries the 1-based line number.
class SchemaError : public Error {
 public:
  SchemaError(const std::string& msg, std::size_t line)
      : Error(msg + " (line " + std::to_string(line) + ")"), line(line) {}

  std::size_t line = 0;
};

}  // namespace hbi
