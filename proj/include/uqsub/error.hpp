#pragma once

#include <stdexcept>
#include <string>

namespace uqsub {

// Base of every exception the library throws. The C API maps each subclass to
// a distinct status code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An argument outside the documented domain (theta outside the support,
// coordinate outside [0,1], ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Inconsistent shapes or incompatible objects (projection kind vs basis kind,
// partition that is not a refinement, ...).
class StructureError : public Error {
 public:
  using Error::Error;
};

class CapacityError : public Error {
 public:
  using Error::Error;
};

// Malformed configuration or input file. `field` names the offending key.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(field.empty() ? what : field + ": " + what),
        field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace uqsub
