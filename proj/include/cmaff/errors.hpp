#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cmaff {

// Base for every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor or layer dimensions do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf in data or a non-finite function evaluation.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Inconsistent configuration (e.g. concat arrangement without projection).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed binary or image file.
class FormatError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Text input that could not be parsed. Carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// A rotated box whose horizontal extent or vertical extent is zero.
class DegenerateGeometryError : public Error {
 public:
  using Error::Error;
};

// Wrong number of mosaic tiles.
class ArityError : public Error {
 public:
  using Error::Error;
};

// RGB and IR planes of one sample have different spatial sizes.
class AlignmentError : public Error {
 public:
  using Error::Error;
};

}  // namespace cmaff
