#pragma once

#include <stdexcept>
#include <string>

namespace gaussperc {

// Precondition failure on a user-facing parameter. `field()` names the
// offending parameter so the CLI can report it verbatim.
class ValidationError : public std::invalid_argument {
 public:
  ValidationError(std::string field, const std::string& message)
      : std::invalid_argument(field + ": " + message), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// A configuration that would exceed the memory or cell budget.
class ResourceError : public std::runtime_error {
 public:
  ResourceError(std::string limit, const std::string& message)
      : std::runtime_error(limit + ": " + message), limit_(std::move(limit)) {}

  const std::string& limit() const noexcept { return limit_; }

 private:
  std::string limit_;
};

}  // namespace gaussperc
