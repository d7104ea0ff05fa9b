#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nerkit {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text. `line` is 1-based; 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// A tag or type that does not belong to the label schema.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Corrupt or truncated binary file; `offset` is the byte position of the fault.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Corpus and embeddings disagree on ids or token counts.
class AlignmentError : public Error {
 public:
  using Error::Error;
};

/// Loss or parameters became non-finite.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace nerkit
