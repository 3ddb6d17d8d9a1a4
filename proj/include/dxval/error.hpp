#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dxval {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed input data. Carries the 1-based row (CSV, header is row 1) or
/// record index (JSON) when one applies; 0 means "no row context".
class ParseError : public Error {
public:
  explicit ParseError(const std::string& msg, std::size_t row = 0)
      : Error(row ? msg + " (row " + std::to_string(row) + ")" : msg), row_(row) {}

  std::size_t row() const noexcept { return row_; }

private:
  std::size_t row_;
};

/// A precondition on an operation's arguments does not hold.
class DomainError : public Error {
public:
  using Error::Error;
};

/// An operation is not permitted in the current state (pipeline ordering).
class StateError : public Error {
public:
  using Error::Error;
};

} // namespace dxval
