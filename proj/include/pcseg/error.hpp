#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pcseg {

enum class ErrorKind {
  Parse,           // malformed input text or header
  Data,            // well-formed but invalid values (NaN, out of range)
  MissingChannel,  // an operation needs a cloud channel that is absent
  Io,
  Shape,           // row/column count mismatch
  Bounds,          // argument outside its documented range
  EmptyIndex,
  DegeneratePair,  // coincident points handed to pair_features
  Usage,
  Internal,
};

const char* to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library. `line()` is 1-based and only set for
/// text parse/data errors.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what, std::size_t line = 0)
      : std::runtime_error(what), kind_(kind), line_(line) {}

  ErrorKind kind() const noexcept { return kind_; }
  std::size_t line() const noexcept { return line_; }

 private:
  ErrorKind kind_;
  std::size_t line_;
};

}  // namespace pcseg
