#pragma once

#include <stdexcept>
#include <string>

namespace tskit {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// The inner simulator produced NaN/Inf (model blow-up).
class NonFiniteOutput : public Error {
 public:
  using Error::Error;
};

/// A state handed to the map contained NaN/Inf.
class NonFiniteInput : public Error {
 public:
  using Error::Error;
};

class ZeroDirection : public Error {
 public:
  using Error::Error;
};

class DimensionTooLarge : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class UnknownParameter : public Error {
 public:
  using Error::Error;
};

class NotAFixedPoint : public Error {
 public:
  using Error::Error;
};

class DegenerateTangent : public Error {
 public:
  using Error::Error;
};

class CorrectorFailed : public Error {
 public:
  using Error::Error;
};

class InitialSolveFailed : public Error {
 public:
  using Error::Error;
};

class UnstableEnvelope : public Error {
 public:
  using Error::Error;
};

class CflViolation : public Error {
 public:
  using Error::Error;
};

class NegativeConcentration : public Error {
 public:
  using Error::Error;
};

class IncomparableRuns : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed run configuration. Carries the 1-based source position when
/// known (0 otherwise).
class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, int line = 0, int column = 0)
      : Error(line > 0 ? what + " (line " + std::to_string(line) + ", column " + std::to_string(column) + ")"
                       : what),
        line_(line),
        column_(column) {}

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

}  // namespace tskit
