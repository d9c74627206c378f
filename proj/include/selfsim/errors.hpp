#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace selfsim {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A parameter violates a documented precondition (bad range, degenerate
/// alphabet, wrong eta mode, ...).
struct DomainError : Error {
  using Error::Error;
};

/// The Erdos-Kahane chain left its validity region (eps_tilde >= 1/2).
struct ValidityError : Error {
  using Error::Error;
};

/// A root-finding problem has no sign change on the admissible interval.
struct InfeasibleError : Error {
  using Error::Error;
};

/// A size guard would be exceeded (atom counts, sample counts, overflow).
struct ResourceError : Error {
  using Error::Error;
};

/// Map-expression syntax error; `position` is the byte offset in the input.
struct ParseError : Error {
  ParseError(const std::string& what, std::size_t position_)
      : Error(what + " (at position " + std::to_string(position_) + ")"),
        position(position_) {}
  std::size_t position;
};

}  // namespace selfsim
