#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hiernav {

// Bad input: malformed files, unknown names, violated preconditions.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input that failed to parse, with the offending line (1-based).
class ParseError : public ValidationError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : ValidationError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Valid input, but the computation itself could not complete
// (diverged training, uncalibratable node, ...).
class ComputeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hiernav
