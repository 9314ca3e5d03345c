#pragma once

#include <stdexcept>
#include <string>

namespace henonlab {

/// Raised when an input violates a documented precondition. `field()` names
/// the offending parameter so front ends can report it (CLI exit 2, HTTP 400).
class ValidationError : public std::invalid_argument {
 public:
  ValidationError(std::string field, const std::string& message)
      : std::invalid_argument(field + ": " + message), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// A computation was refused or cut short by a resource guard.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The unstable-manifold parameterization failed to converge.
class LinearizationError : public std::runtime_error {
 public:
  LinearizationError(const std::string& message, double best_defect)
      : std::runtime_error(message), best_defect_(best_defect) {}

  double best_defect() const noexcept { return best_defect_; }

 private:
  double best_defect_;
};

}  // namespace henonlab
