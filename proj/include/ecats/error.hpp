#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ecats {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed formula text. `offset()` is the byte offset of the offending token.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Formula cannot be evaluated on the given trajectory (bad variable, bad time, empty window).
class EvalError : public Error {
 public:
  using Error::Error;
};

/// Tensor or data shape mismatch.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration or precondition violation.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// File missing, unreadable, or violating its schema.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace ecats
