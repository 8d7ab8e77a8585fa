#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ladderopt {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A value or object violates a documented invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// An operation received no usable input (no valid trace records, no points).
class EmptyInputError : public Error {
 public:
  using Error::Error;
};

// Caller broke an operation's precondition (e.g. lo > hi).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// Malformed file content. `line` is 1-based, 0 when not line oriented.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// No start reached the quality floor.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

// Inputs that must describe the same chunk/ladder do not.
class MismatchError : public Error {
 public:
  using Error::Error;
};

}  // namespace ladderopt
