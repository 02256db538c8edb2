#pragma once

#include <stdexcept>
#include <string>

namespace calabi {

/// Base of every failure raised by the library. Callers that only need to
/// report can catch this; the subclasses exist so that tests and the CLI can
/// map each failure mode to its own exit status.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidGrid : public Error {
 public:
  using Error::Error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A profile lost one of the Kahler cone conditions (phi' in (0,b), phi'' > 0).
class ConeViolation : public Error {
 public:
  using Error::Error;
};

class NumericalBlowup : public Error {
 public:
  using Error::Error;
};

class FormulaMismatch : public Error {
 public:
  using Error::Error;
};

class VertexAtBoundary : public Error {
 public:
  using Error::Error;
};

class WrongSingularityType : public Error {
 public:
  using Error::Error;
};

class BracketError : public Error {
 public:
  using Error::Error;
};

class PositivityLoss : public Error {
 public:
  using Error::Error;
};

class Inconclusive : public Error {
 public:
  using Error::Error;
};

/// Schema or parse failure in a run configuration. `field` is the dotted
/// path of the offending entry ("class.b0"), empty for syntax errors.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace calabi
