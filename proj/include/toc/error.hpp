#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace toc {

// Base for everything the library throws on bad input or corrupt data.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  DimensionMismatch(const std::string& what, std::size_t expected, std::size_t actual)
      : Error(what + ": expected length " + std::to_string(expected) + ", got " +
              std::to_string(actual)),
        expected_(expected),
        actual_(actual) {}

  std::size_t expected() const noexcept { return expected_; }
  std::size_t actual() const noexcept { return actual_; }

 private:
  std::size_t expected_;
  std::size_t actual_;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// (I, D) violates the structural rules of an encoding.
class CorruptEncoding : public Error {
 public:
  using Error::Error;
};

// Byte-level problems while reading a serialized block or container.
class FormatError : public Error {
 public:
  enum class Kind { kBadMagic, kBadVersion, kTruncated, kInconsistent, kUnsupportedWidth };

  FormatError(Kind kind, std::size_t offset, const std::string& what)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"),
        kind_(kind),
        offset_(offset) {}

  Kind kind() const noexcept { return kind_; }
  std::size_t offset() const noexcept { return offset_; }

 private:
  Kind kind_;
  std::size_t offset_;
};

// Malformed text input; line is 1-based.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace toc
