#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace gdnet {

/// Raised when a caller breaks an operation's precondition (shapes, ranges).
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or truncated input file. `offset()` is the byte position where
/// parsing stopped.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::uint64_t offset)
      : std::runtime_error(what + " (at byte offset " + std::to_string(offset) + ")"),
        reason_(what),
        offset_(offset) {}
  std::uint64_t offset() const noexcept { return offset_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::string reason_;
  std::uint64_t offset_;
};

/// Invalid run configuration: unknown keys, empty parameter selections,
/// empty filtered datasets.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gdnet
