#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace betascan {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

/// Malformed or out-of-contract input (bad dimensions, negative radii, ...).
class InputError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "input_error"; }
};

/// A ball that contains no sample point where one is required.
class EmptyBallError : public InputError {
 public:
  using InputError::InputError;
  const char* kind() const noexcept override { return "empty_ball"; }
};

/// A sample or CSV file that does not conform to the on-disk format.
class ParseError : public InputError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : InputError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }
  const char* kind() const noexcept override { return "parse_error"; }

 private:
  std::size_t line_;
};

/// A mathematical precondition of a check does not hold on the data, so the
/// check is unverifiable rather than failed.
class PreconditionError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "precondition_error"; }
};

/// The computation itself broke down (non-finite values, degenerate frames).
class NumericalError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "numerical_error"; }
};

}  // namespace betascan
