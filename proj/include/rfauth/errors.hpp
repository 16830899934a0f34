#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rfauth {

/// Bad run configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A required earlier pipeline stage has not produced its outputs (exit code 3).
class MissingStageError : public std::runtime_error {
 public:
  explicit MissingStageError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Non-finite or otherwise unusable numerical result (exit code 4).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed on-disk container; carries the byte offset where parsing failed.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& msg, std::size_t byte_offset)
      : std::runtime_error(msg + " (byte offset " + std::to_string(byte_offset) + ")"),
        offset(byte_offset) {}
  std::size_t offset;
};

}  // namespace rfauth
