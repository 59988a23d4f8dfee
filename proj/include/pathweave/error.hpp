#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pathweave {

// Domain failures (evaluation, analysis) map to exit status 1; input
// failures (I/O, syntax) map to exit status 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const noexcept { return 1; }
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class InputError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

class IoError : public InputError {
 public:
  using InputError::InputError;
};

// Syntax error in a path expression; `offset` is a byte offset into the text.
class ParseError : public InputError {
 public:
  ParseError(std::size_t offset, const std::string& message)
      : InputError("syntax error at offset " + std::to_string(offset) + ": " +
                   message),
        offset_(offset),
        message_(message) {}

  std::size_t offset() const noexcept { return offset_; }
  const std::string& message() const noexcept { return message_; }

 private:
  std::size_t offset_;
  std::string message_;
};

}  // namespace pathweave
