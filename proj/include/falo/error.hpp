#pragma once

#include <stdexcept>
#include <string>

namespace falo {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

// File contents are malformed (truncated record, bad header, non-finite value, checksum).
class FormatError : public Error {
 public:
  using Error::Error;
};

// Tensor or parameter dimensions do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Invalid or inconsistent configuration. `field()` names the offending key.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& message)
      : Error(field + ": " + message), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace falo
