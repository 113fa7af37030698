#pragma once

#include <stdexcept>
#include <string>

namespace dehnfill {

/// Raised when an operation is called outside its domain (bad input shape,
/// point outside the space, malformed spec).
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

/// Raised by the LP oracle when the prescribed cycle is not a boundary in the
/// complex. `certificate_cell` is the k-cell carrying the largest entry of the
/// separating cocycle.
class InfeasibleError : public std::runtime_error {
 public:
  InfeasibleError(const std::string& what, long certificate_cell)
      : std::runtime_error(what), certificate_cell_(certificate_cell) {}
  long certificate_cell() const { return certificate_cell_; }

 private:
  long certificate_cell_;
};

}  // namespace dehnfill
