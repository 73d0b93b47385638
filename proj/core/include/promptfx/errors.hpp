#pragma once

#include <stdexcept>
#include <string>

namespace promptfx {

/// Base class for every error raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller-supplied value violates an operation's precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Reading or writing a file failed, or the file is not in a supported format.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Target and contrast prompts embed to the same point, so no direction exists.
class DegeneratePromptError : public Error {
 public:
  using Error::Error;
};

/// The backend cannot provide gradients with respect to audio samples.
class BackendError : public Error {
 public:
  using Error::Error;
};

/// A parameter document does not match the chain schema. `field()` holds the
/// dotted path of the offending entry, e.g. "eq.low_shelf_gain_db.value".
class SchemaError : public Error {
 public:
  SchemaError(std::string field, const std::string& message)
      : Error(field.empty() ? message : field + ": " + message), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace promptfx
