#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ulvm {

// Shape algebra violation: mismatched extents, wrong rank, odd pooling extent.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Numeric precondition violated (e.g. non-positive step size).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Invalid hyperparameters or network configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed file contents. Carries the byte offset at which parsing failed.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace ulvm
